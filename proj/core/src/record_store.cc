#include "nutrisight/record_store.h"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "nutrisight/error.h"

namespace nutrisight::service {

namespace {

void write_all(int fd, const std::string& data, const std::filesystem::path& path) {
  std::size_t done = 0;
  while (done < data.size()) {
    const ssize_t n = ::write(fd, data.data() + done, data.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail(ErrorKind::kStorage, fmt::format("write to {} failed: {}", path.string(), std::strerror(errno)));
    }
    done += static_cast<std::size_t>(n);
  }
}

}  // namespace

JsonlRecordStore::JsonlRecordStore(std::filesystem::path dir)
    : dir_(std::move(dir)), log_path_(dir_ / "records.jsonl") {
  std::error_code ec;
  std::filesystem::create_directories(dir_ / "images", ec);
  if (ec) fail(ErrorKind::kStorage, fmt::format("cannot create store {}: {}", dir_.string(), ec.message()));
  std::ifstream in(log_path_, std::ios::binary);
  if (!in) return;
  std::string line;
  std::uint64_t offset = 0;
  while (std::getline(in, line)) {
    const std::uint64_t length = line.size();
    const bool complete = !in.eof();
    if (!complete) {
      spdlog::warn("record store {}: ignoring torn final line at byte {}", log_path_.string(), offset);
      break;
    }
    Json j;
    try {
      j = Json::parse(line);
    } catch (const std::exception& e) {
      fail(ErrorKind::kStorage, fmt::format("record store {} is corrupt at byte {}: {}", log_path_.string(), offset,
                                            e.what()));
    }
    const std::string id = j.at("record_id").get<std::string>();
    if (j.at("type") == "record") {
      index_[id].insert(index_[id].begin(), Span{offset, length});
      ++base_counts_[j.at("id_base").get<std::string>()];
    } else {
      index_[id].push_back(Span{offset, length});
    }
    offset += length + 1;
  }
}

void JsonlRecordStore::append_line(const std::string& line, Span* span) {
  const int fd = ::open(log_path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) fail(ErrorKind::kStorage, fmt::format("cannot open {}: {}", log_path_.string(), std::strerror(errno)));
  const off_t end = ::lseek(fd, 0, SEEK_END);
  try {
    write_all(fd, line + "\n", log_path_);
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
  span->offset = static_cast<std::uint64_t>(end);
  span->length = line.size();
}

std::size_t JsonlRecordStore::count_for_base(const std::string& id_base) const {
  std::lock_guard lock(mutex_);
  const auto it = base_counts_.find(id_base);
  return it == base_counts_.end() ? 0 : it->second;
}

void JsonlRecordStore::append_record(const std::string& id_base, const StoredRecord& record) {
  Json j;
  j["type"] = "record";
  j["record_id"] = record.record_id;
  j["id_base"] = id_base;
  j["subject"] = record.subject;
  j["response"] = record.response;
  std::lock_guard lock(mutex_);
  if (index_.count(record.record_id) > 0) {
    fail(ErrorKind::kStorage, fmt::format("record '{}' already exists", record.record_id));
  }
  Span span{};
  append_line(j.dump(), &span);
  index_[record.record_id].push_back(span);
  ++base_counts_[id_base];
}

void JsonlRecordStore::append_plan(const std::string& record_id, const Json& plan) {
  Json j;
  j["type"] = "plan";
  j["record_id"] = record_id;
  j["plan"] = plan;
  std::lock_guard lock(mutex_);
  const auto it = index_.find(record_id);
  if (it == index_.end()) throw Error(ErrorKind::kNotFound, fmt::format("no record '{}'", record_id), "store");
  Span span{};
  append_line(j.dump(), &span);
  it->second.push_back(span);
}

Json JsonlRecordStore::read_line(const Span& span) const {
  std::ifstream in(log_path_, std::ios::binary);
  if (!in) throw Error(ErrorKind::kStorage, "record store file is missing: " + log_path_.string(), "store");
  std::string buf(span.length, '\0');
  in.seekg(static_cast<std::streamoff>(span.offset));
  in.read(buf.data(), static_cast<std::streamsize>(span.length));
  if (in.gcount() != static_cast<std::streamsize>(span.length)) {
    throw Error(ErrorKind::kStorage, "record store file was truncated: " + log_path_.string(), "store");
  }
  try {
    return Json::parse(buf);
  } catch (const std::exception& e) {
    throw Error(ErrorKind::kStorage, std::string("record store file was modified: ") + e.what(), "store");
  }
}

StoredRecord JsonlRecordStore::get(const std::string& record_id) const {
  std::vector<Span> spans;
  {
    std::lock_guard lock(mutex_);
    const auto it = index_.find(record_id);
    if (it == index_.end()) throw Error(ErrorKind::kNotFound, fmt::format("no record '{}'", record_id), "store");
    spans = it->second;
  }
  StoredRecord out;
  const Json head = read_line(spans.front());
  if (head.value("record_id", "") != record_id) {
    throw Error(ErrorKind::kStorage, "record store index does not match the file", "store");
  }
  out.record_id = record_id;
  out.subject = head.at("subject");
  out.response = head.at("response");
  for (std::size_t i = 1; i < spans.size(); ++i) out.plans.push_back(read_line(spans[i]).at("plan"));
  return out;
}

bool JsonlRecordStore::contains(const std::string& record_id) const {
  std::lock_guard lock(mutex_);
  return index_.count(record_id) > 0;
}

std::string JsonlRecordStore::put_image(const std::string& digest, std::span<const std::uint8_t> bytes) {
  const std::string name = digest + ".img";
  const auto path = dir_ / "images" / name;
  std::lock_guard lock(mutex_);
  if (std::filesystem::exists(path)) return name;
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::kStorage, "cannot write image " + tmp);
  }
  std::filesystem::rename(tmp, path);
  return name;
}

}  // namespace nutrisight::service
