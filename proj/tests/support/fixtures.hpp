#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "foresight/corpus.hpp"

namespace fixtures {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = fs::temp_directory_path() /
            ("foresight-" + tag + "-" + std::to_string(stamp) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline foresight::Instant at_hour(int hour) {
  using namespace std::chrono;
  return sys_days{year{2130} / 1 / 1} + hours{hour};
}

inline foresight::Note note(std::string id, std::string admission, std::string patient, int hour,
                            std::string text,
                            foresight::NoteCategory category = foresight::NoteCategory::nursing) {
  return {std::move(id), std::move(admission), std::move(patient), at_hour(hour), category,
          std::move(text)};
}

// n notes one hour apart, the last one a discharge note.
inline foresight::Trajectory simple_trajectory(const std::string& admission,
                                               const std::string& patient, int n,
                                               const std::vector<std::string>& texts = {}) {
  std::vector<foresight::Note> notes;
  for (int i = 0; i < n; ++i) {
    std::string text = i < static_cast<int>(texts.size()) ? texts[i] : "stable overnight";
    notes.push_back(note(admission + "-n" + (i < 10 ? "0" : "") + std::to_string(i), admission,
                         patient, i, text,
                         i == n - 1 ? foresight::NoteCategory::discharge
                                    : foresight::NoteCategory::nursing));
  }
  return foresight::Trajectory::build(std::move(notes));
}

inline std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace fixtures
