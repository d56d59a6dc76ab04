#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bwproc {

// Raised for malformed input data and for estimands that are not identified
// by the data at hand (empty risk sets, degenerate windows).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One jump of the cumulative process Y, in forward time since the initial event.
struct ProcessEvent {
  double time = 0.0;
  double mark = 0.0;

  friend bool operator==(const ProcessEvent&, const ProcessEvent&) = default;
};

// Truncation time w, observation time x = min(T, C), failure indicator delta,
// and the process jumps observed on [w, x].
struct SubjectRecord {
  std::string id;
  double w = 0.0;
  double x = 0.0;
  bool delta = false;
  std::vector<ProcessEvent> events;
  // Start of process observation. Equals w except after a prevalent shift,
  // where the entry time moves forward but the recorded jumps are kept.
  std::optional<double> process_start;

  bool incident() const { return w == 0.0; }
  double observed_from() const { return process_start.value_or(w); }

  friend bool operator==(const SubjectRecord&, const SubjectRecord&) = default;
};

// Validated, immutable collection of subjects. Construct through
// validate_cohort(); events inside each subject are sorted by time.
class Cohort {
 public:
  const std::vector<SubjectRecord>& subjects() const { return subjects_; }
  std::size_t size() const { return subjects_.size(); }
  const SubjectRecord& operator[](std::size_t i) const { return subjects_[i]; }
  // Sorted distinct x over uncensored subjects.
  const std::vector<double>& event_times() const { return event_times_; }

 private:
  friend Cohort validate_cohort(std::vector<SubjectRecord> raw);
  std::vector<SubjectRecord> subjects_;
  std::vector<double> event_times_;
};

// Failure-time window [t1, t2) and backward horizon tau0 with 0 < tau0 <= t1 < t2.
struct EstimandWindow {
  double t1 = 0.0;
  double t2 = 0.0;
  double tau0 = 0.0;

  void validate() const;
  bool contains(double x) const { return t1 <= x && x < t2; }
};

Cohort validate_cohort(std::vector<SubjectRecord> raw);

// V(u): total mark over events with x - time <= u (closed window).
// Requires an uncensored subject and 0 <= u <= x.
double backward_value(const SubjectRecord& subject, double u);

// Backward offsets x - time of the subject's events, paired with marks,
// sorted by offset. Only meaningful for uncensored subjects.
std::vector<ProcessEvent> backward_offsets(const SubjectRecord& subject);

// Replaces w by w + tau0 for prevalent subjects (w > 0) and drops those with
// x < w + tau0. Recorded jumps are kept; process_start remembers the original
// entry. Re-applying with tau0 > 0 shifts prevalent subjects again.
Cohort apply_prevalent_shift(const Cohort& cohort, double tau0);

}  // namespace bwproc
