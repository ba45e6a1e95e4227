#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace nutrisight::service {

using Json = nlohmann::ordered_json;

struct StoredRecord {
  std::string record_id;
  Json subject;   // request-side record (age, gender, device, image digest)
  Json response;  // EstimateResponse
  std::vector<Json> plans;
};

class RecordStore {
 public:
  virtual ~RecordStore() = default;
  // Number of records already stored for an id base (used to derive ids).
  virtual std::size_t count_for_base(const std::string& id_base) const = 0;
  // Throws kStorage if record_id already exists.
  virtual void append_record(const std::string& id_base, const StoredRecord& record) = 0;
  // Throws kNotFound for unknown ids.
  virtual void append_plan(const std::string& record_id, const Json& plan) = 0;
  virtual StoredRecord get(const std::string& record_id) const = 0;
  virtual bool contains(const std::string& record_id) const = 0;
  // Content-addressed image bytes; returns the file name.
  virtual std::string put_image(const std::string& digest, std::span<const std::uint8_t> bytes) = 0;
};

// Append-only JSON-lines file plus an in-memory index of line offsets.
// Every event is written with one append so a record is either complete or
// absent; a torn final line is ignored on open. Reads go back to the file.
class JsonlRecordStore final : public RecordStore {
 public:
  // `dir` holds records.jsonl and images/.
  explicit JsonlRecordStore(std::filesystem::path dir);

  std::size_t count_for_base(const std::string& id_base) const override;
  void append_record(const std::string& id_base, const StoredRecord& record) override;
  void append_plan(const std::string& record_id, const Json& plan) override;
  StoredRecord get(const std::string& record_id) const override;
  bool contains(const std::string& record_id) const override;
  std::string put_image(const std::string& digest, std::span<const std::uint8_t> bytes) override;

  const std::filesystem::path& log_path() const { return log_path_; }

 private:
  struct Span {
    std::uint64_t offset;
    std::uint64_t length;
  };
  void append_line(const std::string& line, Span* span);
  Json read_line(const Span& span) const;

  std::filesystem::path dir_;
  std::filesystem::path log_path_;
  mutable std::mutex mutex_;
  std::map<std::string, std::vector<Span>> index_;  // first entry is the record
  std::map<std::string, std::size_t> base_counts_;
};

}  // namespace nutrisight::service
