#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "judgevar/error.hpp"

namespace judgevar {

/// One long-format row: a single judge's score of a single generation.
struct ScoreRecord {
  std::string scenario_id;
  std::string generation_id;
  std::string judge_id;
  double score = 0.0;
};

/// Balanced crossed score array indexed (scenario i, generation j, judge l).
///
/// Storage is row-major with judges innermost, so the K scores of one
/// scenario-generation cell are contiguous and the whole tensor is an
/// (n*m) x K matrix. Immutable once constructed.
class ScoreTensor {
 public:
  /// Validates shape, label uniqueness, finiteness and scale bounds.
  ScoreTensor(std::vector<double> scores, std::vector<std::string> scenario_ids,
              std::vector<std::vector<std::string>> generation_ids,
              std::vector<std::string> judge_ids,
              double scale_min = -std::numeric_limits<double>::infinity(),
              double scale_max = std::numeric_limits<double>::infinity());

  /// Builds a tensor with synthetic labels "s<i>", "g<j>", "j<l>".
  static ScoreTensor from_values(std::size_t n, std::size_t m, std::size_t k,
                                 std::vector<double> scores,
                                 double scale_min = -std::numeric_limits<double>::infinity(),
                                 double scale_max = std::numeric_limits<double>::infinity());

  std::size_t scenarios() const noexcept { return n_; }
  std::size_t generations() const noexcept { return m_; }
  std::size_t judges() const noexcept { return k_; }
  std::size_t cells() const noexcept { return scores_.size(); }

  double operator()(std::size_t i, std::size_t j, std::size_t l) const noexcept {
    return scores_[(i * m_ + j) * k_ + l];
  }

  std::span<const double> values() const noexcept { return scores_; }

  /// The m*K scores of scenario i, generation-major.
  std::span<const double> scenario(std::size_t i) const noexcept {
    return std::span<const double>(scores_).subspan(i * m_ * k_, m_ * k_);
  }

  const std::vector<std::string>& scenario_ids() const noexcept { return scenario_ids_; }
  const std::vector<std::vector<std::string>>& generation_ids() const noexcept {
    return generation_ids_;
  }
  const std::vector<std::string>& judge_ids() const noexcept { return judge_ids_; }
  double scale_min() const noexcept { return scale_min_; }
  double scale_max() const noexcept { return scale_max_; }

  /// Tensor restricted to the given judge columns, in the given order.
  ScoreTensor select_judges(std::span<const std::size_t> columns) const;

  std::vector<ScoreRecord> to_records() const;

  friend bool operator==(const ScoreTensor&, const ScoreTensor&) = default;

 private:
  std::vector<double> scores_;
  std::vector<std::string> scenario_ids_;
  std::vector<std::vector<std::string>> generation_ids_;
  std::vector<std::string> judge_ids_;
  double scale_min_;
  double scale_max_;
  std::size_t n_ = 0;
  std::size_t m_ = 0;
  std::size_t k_ = 0;
};

/// Evaluation operating point.
struct Design {
  std::size_t n = 0;      // scenarios
  std::size_t m = 1;      // generations per scenario
  std::size_t k = 1;      // judges per cell
  std::size_t k_tot = 1;  // judge pool size
  std::size_t budget = 0; // per-scenario judge calls

  /// Throws InvalidDesign when n < 1, m < 1, or K is outside [1, K_tot].
  void validate() const;
};

/// Assembles a tensor from long-format records.
///
/// Scenario and judge order follow first appearance in `records`; generation
/// order is first appearance within each scenario. Duplicates are rejected,
/// not averaged.
ScoreTensor ingest_records(std::span<const ScoreRecord> records,
                           double scale_min = -std::numeric_limits<double>::infinity(),
                           double scale_max = std::numeric_limits<double>::infinity());

/// CSV with header `scenario_id,generation_id,judge_id,score`. Parse errors
/// carry 1-based line numbers.
std::vector<ScoreRecord> read_records_csv(std::istream& in);
void write_records_csv(std::ostream& out, std::span<const ScoreRecord> records);

/// JSON array of {scenario_id, generation_id, judge_id, score} objects.
std::vector<ScoreRecord> read_records_json(std::istream& in);
void write_records_json(std::ostream& out, std::span<const ScoreRecord> records);

/// Loads a score file, choosing JSON for a `.json` extension and CSV otherwise.
ScoreTensor load_scores(const std::string& path,
                        double scale_min = -std::numeric_limits<double>::infinity(),
                        double scale_max = std::numeric_limits<double>::infinity());

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

double grand_mean(const ScoreTensor& tensor);

}  // namespace judgevar
