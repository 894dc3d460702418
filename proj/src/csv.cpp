#include "fleetcast/csv.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>
#include <system_error>

namespace fleetcast {

CsvWriter::CsvWriter(const std::string& path) : out_(path), path_(path) {
    if (!out_) {
        throw std::runtime_error("cannot open for writing: " + path);
    }
}

void CsvWriter::field(const std::string& s) {
    if (s.find_first_of(",\n\r") != std::string::npos) {
        throw std::invalid_argument("csv field contains separator: '" + s +
                                    "'");
    }
    if (row_started_) out_ << ',';
    out_ << s;
    row_started_ = true;
}

void CsvWriter::field(const char* s) { field(std::string(s)); }

void CsvWriter::field(double v) { field(format_double(v)); }

void CsvWriter::field(std::int64_t v) {
    char buf[24];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    field(std::string(buf, ptr));
}

void CsvWriter::end_row() {
    out_ << '\n';
    row_started_ = false;
    if (!out_) {
        throw std::runtime_error("write failure on " + path_);
    }
}

CsvReader::CsvReader(const std::string& path) : in_(path), path_(path) {
    if (!in_) {
        throw std::runtime_error("cannot open for reading: " + path);
    }
}

bool CsvReader::next_row(std::vector<std::string>* fields) {
    std::string line;
    while (std::getline(in_, line)) {
        ++line_;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        fields->clear();
        std::size_t start = 0;
        while (true) {
            const std::size_t pos = line.find(',', start);
            if (pos == std::string::npos) {
                fields->push_back(line.substr(start));
                break;
            }
            fields->push_back(line.substr(start, pos - start));
            start = pos + 1;
        }
        return true;
    }
    return false;
}

double parse_double(const std::string& s, const std::string& context) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    // Accept the "inf" sentinel used for uninformative calibration scores.
    if (s == "inf" || s == "+inf") return HUGE_VAL;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        throw std::runtime_error(context + ": bad numeric field '" + s + "'");
    }
    return v;
}

std::int64_t parse_int(const std::string& s, const std::string& context) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw std::runtime_error(context + ": bad integer field '" + s + "'");
    }
    return v;
}

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) {
        throw std::runtime_error("format_double failed");
    }
    return std::string(buf, ptr);
}

}  // namespace fleetcast
