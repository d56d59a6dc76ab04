#include "bwproc/model.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace bwproc {

namespace {

[[noreturn]] void reject(const SubjectRecord& s, const std::string& what) {
  throw Error("subject '" + s.id + "': " + what);
}

void check_subject(const SubjectRecord& s) {
  if (!std::isfinite(s.w) || !std::isfinite(s.x)) reject(s, "non-finite w or x");
  if (s.w < 0.0) reject(s, "negative truncation time");
  if (s.w > s.x) reject(s, "truncation exceeds observation time");
  const double from = s.observed_from();
  if (!std::isfinite(from) || from < 0.0 || from > s.w)
    reject(s, "process start must lie in [0, w]");
  for (const auto& e : s.events) {
    if (!std::isfinite(e.time) || !std::isfinite(e.mark)) reject(s, "non-finite event time or mark");
    if (e.time < from || e.time > s.x) reject(s, "event time outside [w, x]");
  }
}

}  // namespace

void EstimandWindow::validate() const {
  if (!(tau0 > 0.0)) throw Error("window: tau0 must be positive");
  if (!(tau0 <= t1)) throw Error("window: tau0 must not exceed t1");
  if (!(t1 < t2)) throw Error("window: t1 must be less than t2");
}

Cohort validate_cohort(std::vector<SubjectRecord> raw) {
  if (raw.empty()) throw Error("cohort is empty");
  std::unordered_set<std::string> ids;
  for (auto& s : raw) {
    if (!ids.insert(s.id).second) reject(s, "duplicate id");
    check_subject(s);
    std::stable_sort(s.events.begin(), s.events.end(),
                     [](const ProcessEvent& a, const ProcessEvent& b) { return a.time < b.time; });
  }
  Cohort c;
  for (const auto& s : raw)
    if (s.delta) c.event_times_.push_back(s.x);
  std::sort(c.event_times_.begin(), c.event_times_.end());
  c.event_times_.erase(std::unique(c.event_times_.begin(), c.event_times_.end()),
                       c.event_times_.end());
  c.subjects_ = std::move(raw);
  return c;
}

double backward_value(const SubjectRecord& subject, double u) {
  if (!subject.delta) reject(subject, "backward value undefined for a censored subject");
  if (u < 0.0 || u > subject.x) reject(subject, "backward time outside [0, x]");
  double v = 0.0;
  for (const auto& e : subject.events)
    if (subject.x - e.time <= u) v += e.mark;
  return v;
}

std::vector<ProcessEvent> backward_offsets(const SubjectRecord& subject) {
  std::vector<ProcessEvent> out;
  out.reserve(subject.events.size());
  // Events are time-sorted, so walking backward yields ascending offsets.
  for (auto it = subject.events.rbegin(); it != subject.events.rend(); ++it)
    out.push_back({subject.x - it->time, it->mark});
  return out;
}

Cohort apply_prevalent_shift(const Cohort& cohort, double tau0) {
  if (!(tau0 > 0.0)) throw Error("prevalent shift: tau0 must be positive");
  std::vector<SubjectRecord> kept;
  kept.reserve(cohort.size());
  for (const auto& s : cohort.subjects()) {
    if (s.incident()) {
      kept.push_back(s);
      continue;
    }
    const double entry = s.w + tau0;
    if (s.x < entry) continue;
    SubjectRecord shifted = s;
    shifted.process_start = s.observed_from();
    shifted.w = entry;
    kept.push_back(std::move(shifted));
  }
  if (kept.empty()) throw Error("prevalent shift: no subjects remain");
  return validate_cohort(std::move(kept));
}

}  // namespace bwproc
