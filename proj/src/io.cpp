#include "bwproc/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

namespace bwproc {

namespace {

struct Location {
  std::string_view source;
  std::size_t line;
};

[[noreturn]] void parse_error(const Location& at, const std::string& what) {
  throw Error(std::string(at.source) + ":" + std::to_string(at.line) + ": " + what);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                     : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view field, const Location& at, std::string_view column) {
  field = trim(field);
  double v = 0.0;
  const auto* end = field.data() + field.size();
  const auto res = std::from_chars(field.data(), end, v);
  if (field.empty() || res.ec != std::errc() || res.ptr != end)
    parse_error(at, "column '" + std::string(column) + "' is not a number: '" + std::string(field) + "'");
  return v;
}

// Reads all data rows after checking the header; skips blank lines.
template <typename Row>
void read_table(std::istream& in, std::string_view source, const std::vector<std::string>& header,
                Row&& row) {
  std::string line;
  std::size_t lineno = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const Location at{source, lineno};
    std::string_view view = line;
    if (lineno == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
    if (trim(view).empty()) continue;
    auto fields = split(view);
    for (auto& f : fields) f = trim(f);
    if (!seen_header) {
      bool same = fields.size() == header.size();
      for (std::size_t k = 0; same && k < header.size(); ++k) same = fields[k] == header[k];
      if (!same) {
        std::string want;
        for (const auto& h : header) want += (want.empty() ? "" : ",") + h;
        parse_error(at, "expected header '" + want + "'");
      }
      seen_header = true;
      continue;
    }
    if (fields.size() != header.size())
      parse_error(at, "expected " + std::to_string(header.size()) + " fields, got " +
                          std::to_string(fields.size()));
    row(fields, at);
  }
  if (!seen_header) parse_error({source, lineno}, "missing header row");
}

}  // namespace

Cohort ingest(std::istream& subjects, std::istream& events, std::string_view subjects_name,
              std::string_view events_name) {
  std::vector<SubjectRecord> raw;
  std::unordered_map<std::string, std::size_t> index;
  read_table(subjects, subjects_name, {"id", "w", "x", "delta"},
             [&](const std::vector<std::string_view>& f, const Location& at) {
               SubjectRecord s;
               s.id = std::string(f[0]);
               if (s.id.empty()) parse_error(at, "empty id");
               s.w = parse_double(f[1], at, "w");
               s.x = parse_double(f[2], at, "x");
               if (f[3] == "1")
                 s.delta = true;
               else if (f[3] == "0")
                 s.delta = false;
               else
                 parse_error(at, "delta must be 0 or 1");
               if (!index.emplace(s.id, raw.size()).second) parse_error(at, "duplicate id '" + s.id + "'");
               raw.push_back(std::move(s));
             });
  read_table(events, events_name, {"id", "time", "mark"},
             [&](const std::vector<std::string_view>& f, const Location& at) {
               const auto it = index.find(std::string(f[0]));
               if (it == index.end()) parse_error(at, "event for unknown id '" + std::string(f[0]) + "'");
               raw[it->second].events.push_back(
                   {parse_double(f[1], at, "time"), parse_double(f[2], at, "mark")});
             });
  return validate_cohort(std::move(raw));
}

Cohort ingest_files(const std::string& subjects_path, const std::string& events_path) {
  std::ifstream s(subjects_path), e(events_path);
  if (!s) throw Error("cannot open " + subjects_path);
  if (!e) throw Error("cannot open " + events_path);
  return ingest(s, e, subjects_path, events_path);
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_subjects(std::ostream& out, const Cohort& cohort) {
  CsvWriter csv(out, {"id", "w", "x", "delta"});
  for (const auto& s : cohort.subjects()) {
    csv.cell(s.id).cell(s.w).cell(s.x).cell(s.delta ? "1" : "0");
    csv.end_row();
  }
}

void write_events(std::ostream& out, const Cohort& cohort) {
  CsvWriter csv(out, {"id", "time", "mark"});
  for (const auto& s : cohort.subjects())
    for (const auto& e : s.events) {
      csv.cell(s.id).cell(e.time).cell(e.mark);
      csv.end_row();
    }
}

CsvWriter::CsvWriter(std::ostream& out, const std::vector<std::string>& header) : out_(out) {
  for (const auto& h : header) cell(std::string_view(h));
  end_row();
}

CsvWriter& CsvWriter::cell(double v) { return cell(std::string_view(format_number(v))); }

CsvWriter& CsvWriter::cell(std::string_view v) {
  if (!first_) out_ << ',';
  out_ << v;
  first_ = false;
  return *this;
}

void CsvWriter::end_row() {
  out_ << '\n';
  first_ = true;
}

}  // namespace bwproc
