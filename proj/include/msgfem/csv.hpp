#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "msgfem/errors.hpp"

namespace msgfem {

inline constexpr const char* kArtifactVersion = "msgfem-1.0";

/// @brief Deterministic CSV emitter.
///
/// Every file starts with two comment lines carrying the config hash and the
/// artifact version, then the header row.  Doubles print with %.17g so a
/// value survives a write/read round trip unchanged, and rows end in plain
/// newlines; two runs with the same inputs produce byte-identical files.
class CsvWriter {
 public:
  CsvWriter(const std::string& dir, const std::string& filename, const std::string& config_hash,
            const std::vector<std::string>& columns) {
    std::filesystem::create_directories(dir);
    path_ = dir + "/" + filename;
    out_.open(path_, std::ios::trunc);
    if (!out_) throw ConfigError("cannot write output file: " + path_);
    out_ << "# config " << config_hash << "\n# artifact " << kArtifactVersion << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i)
      out_ << columns[i] << (i + 1 < columns.size() ? "," : "\n");
  }

  class Row {
   public:
    explicit Row(std::ofstream& out) : out_(out) {}
    Row& operator<<(int v) {
      sep();
      out_ << v;
      return *this;
    }
    Row& operator<<(double v) {
      sep();
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out_ << buf;
      return *this;
    }
    Row& operator<<(const std::string& v) {
      sep();
      out_ << v;
      return *this;
    }
    ~Row() { out_ << "\n"; }
    Row(const Row&) = delete;
    Row& operator=(const Row&) = delete;

   private:
    void sep() {
      if (!first_) out_ << ",";
      first_ = false;
    }
    std::ofstream& out_;
    bool first_ = true;
  };

  Row row() { return Row(out_); }

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
};

}  // namespace msgfem
