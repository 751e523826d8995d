#include "foresight/jsonl.hpp"

#include <cstdint>
#include <fstream>

#include "foresight/errors.hpp"

namespace foresight {

json to_json(const ArtifactMeta& meta) {
  return json{{"stage", meta.stage}, {"config_hash", meta.config_hash}, {"seed", meta.seed}};
}

bool is_meta_line(const json& object) {
  return object.is_object() && object.size() == 1 && object.contains("_meta");
}

void read_jsonl(const std::filesystem::path& path,
                const std::function<void(const json&, std::size_t)>& on_record,
                const std::function<void(const json&)>& on_meta) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json object;
    try {
      object = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    if (!object.is_object()) throw ParseError("expected a JSON object", line_no);
    if (is_meta_line(object)) {
      if (on_meta) on_meta(object.at("_meta"));
      continue;
    }
    on_record(object, line_no);
  }
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& records,
                 const ArtifactMeta* meta) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io_error", "cannot write " + path.string());
  if (meta) out << json{{"_meta", to_json(*meta)}}.dump() << '\n';
  for (const auto& r : records) out << r.dump() << '\n';
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& value) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io_error", "cannot write " + path.string());
  out << value.dump(2) << '\n';
}

bool is_nonnegative_integer(const json& value) {
  if (value.is_number_unsigned()) return true;
  return value.is_number_integer() && value.get<std::int64_t>() >= 0;
}

std::string require_string(const json& object, const char* key, std::size_t line) {
  const auto it = object.find(key);
  if (it == object.end() || !it->is_string())
    throw ParseError(std::string("missing or non-string field '") + key + "'", line);
  return it->get<std::string>();
}

double require_number(const json& object, const char* key, std::size_t line) {
  const auto it = object.find(key);
  if (it == object.end() || !it->is_number())
    throw ParseError(std::string("missing or non-numeric field '") + key + "'", line);
  return it->get<double>();
}

}  // namespace foresight
