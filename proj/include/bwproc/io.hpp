#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "bwproc/model.hpp"

namespace bwproc {

// subjects.csv header: id,w,x,delta    events.csv header: id,time,mark
// Parse failures carry "<source>:<line>: " prefixes.
Cohort ingest(std::istream& subjects, std::istream& events,
              std::string_view subjects_name = "subjects.csv",
              std::string_view events_name = "events.csv");
Cohort ingest_files(const std::string& subjects_path, const std::string& events_path);

// Writes the two CSV files that ingest() reads back. process_start is not
// part of the on-disk format.
void write_subjects(std::ostream& out, const Cohort& cohort);
void write_events(std::ostream& out, const Cohort& cohort);

// Shortest round-trip decimal form of a double.
std::string format_number(double v);

// Minimal CSV table writer: header first, then rows of numbers or strings.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::vector<std::string>& header);
  CsvWriter& cell(double v);
  CsvWriter& cell(std::string_view v);
  void end_row();

 private:
  std::ostream& out_;
  bool first_ = true;
};

}  // namespace bwproc
