#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace foresight {

using json = nlohmann::json;

// Provenance stamped into every artifact the pipeline writes.
struct ArtifactMeta {
  std::string stage;
  std::string config_hash;
  std::uint64_t seed = 0;
};

json to_json(const ArtifactMeta& meta);

// A JSONL object whose only key is "_meta" is a provenance header; readers
// skip it and hand it to on_meta when provided.
bool is_meta_line(const json& object);

// Calls on_record(object, line_number) for each non-empty, non-meta line.
// Lines that are not JSON objects raise ParseError with the line number.
void read_jsonl(const std::filesystem::path& path,
                const std::function<void(const json&, std::size_t)>& on_record,
                const std::function<void(const json&)>& on_meta = {});

// Writes the optional meta header then one compact object per line.
void write_jsonl(const std::filesystem::path& path, const std::vector<json>& records,
                 const ArtifactMeta* meta = nullptr);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& value);

// True for integral JSON numbers >= 0, whether parsed or built in code.
bool is_nonnegative_integer(const json& value);

// Field accessors raising ParseError naming the missing/mistyped key.
std::string require_string(const json& object, const char* key, std::size_t line = 0);
double require_number(const json& object, const char* key, std::size_t line = 0);

}  // namespace foresight
