#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace fleetcast {

// Minimal CSV layer for the formats this project reads and writes: plain
// comma separation, no quoting (field content never contains commas).
// Doubles are written in shortest round-trip form so load(save(x)) == x
// bit for bit.

class CsvWriter {
  public:
    explicit CsvWriter(const std::string& path);

    void field(const std::string& s);
    void field(const char* s);
    void field(double v);
    void field(std::int64_t v);
    void field(int v) { field(static_cast<std::int64_t>(v)); }
    void field(std::size_t v) { field(static_cast<std::int64_t>(v)); }
    void end_row();

    // Convenience: writes all fields and terminates the row.
    template <typename... Ts>
    void row(const Ts&... vs) {
        (field(vs), ...);
        end_row();
    }

  private:
    std::ofstream out_;
    bool row_started_ = false;
    std::string path_;
};

class CsvReader {
  public:
    explicit CsvReader(const std::string& path);

    // Returns false at end of file.  Skips completely blank lines.
    bool next_row(std::vector<std::string>* fields);

    std::size_t line_number() const { return line_; }
    const std::string& path() const { return path_; }

  private:
    std::ifstream in_;
    std::string path_;
    std::size_t line_ = 0;
};

// Strict numeric parsing helpers; `context` names the file (and optionally
// line) for the error message.
double parse_double(const std::string& s, const std::string& context);
std::int64_t parse_int(const std::string& s, const std::string& context);

// Shortest round-trip decimal rendering of a double.
std::string format_double(double v);

}  // namespace fleetcast
