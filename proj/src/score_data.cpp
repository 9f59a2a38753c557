#include "judgevar/score_data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "judgevar/simd/kernels.hpp"

namespace judgevar {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::MissingCell: return "MissingCell";
    case ErrorKind::DuplicateCell: return "DuplicateCell";
    case ErrorKind::UnbalancedDesign: return "UnbalancedDesign";
    case ErrorKind::OutOfScale: return "OutOfScale";
    case ErrorKind::DegenerateDesign: return "DegenerateDesign";
    case ErrorKind::ZeroResidual: return "ZeroResidual";
    case ErrorKind::InvalidDesign: return "InvalidDesign";
    case ErrorKind::Uncentered: return "Uncentered";
    case ErrorKind::IndivisibleBudget: return "IndivisibleBudget";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::DegeneratePool: return "DegeneratePool";
    case ErrorKind::EmptyPool: return "EmptyPool";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Error";
}

namespace {

void require_unique(const std::vector<std::string>& labels, const char* axis) {
  std::unordered_set<std::string> seen;
  for (const auto& label : labels)
    if (!seen.insert(label).second)
      throw Error(ErrorKind::DuplicateCell, std::string("duplicate ") + axis + " label '" + label + "'");
}

void check_scale(double score, double lo, double hi, const std::string& where) {
  if (!std::isfinite(score)) throw Error(ErrorKind::Parse, "non-finite score at " + where);
  if (score < lo || score > hi)
    throw Error(ErrorKind::OutOfScale, "score " + format_double(score) + " at " + where +
                                           " outside [" + format_double(lo) + ", " +
                                           format_double(hi) + "]");
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

ScoreTensor::ScoreTensor(std::vector<double> scores, std::vector<std::string> scenario_ids,
                         std::vector<std::vector<std::string>> generation_ids,
                         std::vector<std::string> judge_ids, double scale_min, double scale_max)
    : scores_(std::move(scores)),
      scenario_ids_(std::move(scenario_ids)),
      generation_ids_(std::move(generation_ids)),
      judge_ids_(std::move(judge_ids)),
      scale_min_(scale_min),
      scale_max_(scale_max),
      n_(scenario_ids_.size()),
      m_(generation_ids_.empty() ? 0 : generation_ids_.front().size()),
      k_(judge_ids_.size()) {
  if (!(scale_min_ <= scale_max_))
    throw Error(ErrorKind::InvalidArgument, "scale_min must not exceed scale_max");
  if (n_ == 0 || m_ == 0 || k_ == 0)
    throw Error(ErrorKind::InvalidDesign, "tensor needs at least one scenario, generation and judge");
  if (generation_ids_.size() != n_)
    throw Error(ErrorKind::UnbalancedDesign, "generation label lists do not match scenario count");
  for (std::size_t i = 0; i < n_; ++i) {
    if (generation_ids_[i].size() != m_)
      throw Error(ErrorKind::UnbalancedDesign,
                  "scenario '" + scenario_ids_[i] + "' has " +
                      std::to_string(generation_ids_[i].size()) + " generations, expected " +
                      std::to_string(m_));
    require_unique(generation_ids_[i], "generation");
  }
  require_unique(scenario_ids_, "scenario");
  require_unique(judge_ids_, "judge");
  if (scores_.size() != n_ * m_ * k_)
    throw Error(ErrorKind::MissingCell, "expected " + std::to_string(n_ * m_ * k_) +
                                            " scores, got " + std::to_string(scores_.size()));
  for (std::size_t c = 0; c < scores_.size(); ++c)
    check_scale(scores_[c], scale_min_, scale_max_, "cell " + std::to_string(c));
}

ScoreTensor ScoreTensor::from_values(std::size_t n, std::size_t m, std::size_t k,
                                     std::vector<double> scores, double scale_min,
                                     double scale_max) {
  std::vector<std::string> sids(n), jids(k);
  std::vector<std::vector<std::string>> gids(n, std::vector<std::string>(m));
  for (std::size_t i = 0; i < n; ++i) {
    sids[i] = "s" + std::to_string(i);
    for (std::size_t j = 0; j < m; ++j) gids[i][j] = "g" + std::to_string(j);
  }
  for (std::size_t l = 0; l < k; ++l) jids[l] = "j" + std::to_string(l);
  return ScoreTensor(std::move(scores), std::move(sids), std::move(gids), std::move(jids),
                     scale_min, scale_max);
}

ScoreTensor ScoreTensor::select_judges(std::span<const std::size_t> columns) const {
  std::vector<std::string> jids;
  for (std::size_t c : columns) {
    if (c >= k_) throw Error(ErrorKind::InvalidArgument, "judge column out of range");
    jids.push_back(judge_ids_[c]);
  }
  std::vector<double> out;
  out.reserve(n_ * m_ * columns.size());
  for (std::size_t row = 0; row < n_ * m_; ++row)
    for (std::size_t c : columns) out.push_back(scores_[row * k_ + c]);
  return ScoreTensor(std::move(out), scenario_ids_, generation_ids_, std::move(jids), scale_min_,
                     scale_max_);
}

std::vector<ScoreRecord> ScoreTensor::to_records() const {
  std::vector<ScoreRecord> out;
  out.reserve(scores_.size());
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < m_; ++j)
      for (std::size_t l = 0; l < k_; ++l)
        out.push_back({scenario_ids_[i], generation_ids_[i][j], judge_ids_[l], (*this)(i, j, l)});
  return out;
}

void Design::validate() const {
  if (n < 1 || m < 1) throw Error(ErrorKind::InvalidDesign, "n and m must be at least 1");
  if (k < 1 || k > k_tot)
    throw Error(ErrorKind::InvalidDesign, "K must lie in [1, K_tot], got K=" + std::to_string(k) +
                                              ", K_tot=" + std::to_string(k_tot));
}

ScoreTensor ingest_records(std::span<const ScoreRecord> records, double scale_min,
                           double scale_max) {
  if (records.empty()) throw Error(ErrorKind::MissingCell, "no records");

  std::vector<std::string> scenario_ids, judge_ids;
  std::unordered_map<std::string, std::size_t> scenario_index, judge_index;
  std::vector<std::vector<std::string>> generation_ids;
  std::vector<std::unordered_map<std::string, std::size_t>> generation_index;
  struct Cell {
    std::size_t i, j, l;
    double score;
  };
  std::vector<Cell> cells;
  cells.reserve(records.size());

  for (std::size_t r = 0; r < records.size(); ++r) {
    const ScoreRecord& rec = records[r];
    check_scale(rec.score, scale_min, scale_max, "record " + std::to_string(r + 1));
    auto [sit, new_scenario] = scenario_index.try_emplace(rec.scenario_id, scenario_ids.size());
    if (new_scenario) {
      scenario_ids.push_back(rec.scenario_id);
      generation_ids.emplace_back();
      generation_index.emplace_back();
    }
    const std::size_t i = sit->second;
    auto [git, new_gen] = generation_index[i].try_emplace(rec.generation_id, generation_ids[i].size());
    if (new_gen) generation_ids[i].push_back(rec.generation_id);
    auto [jit, new_judge] = judge_index.try_emplace(rec.judge_id, judge_ids.size());
    if (new_judge) judge_ids.push_back(rec.judge_id);
    cells.push_back({i, git->second, jit->second, rec.score});
  }

  const std::size_t n = scenario_ids.size();
  const std::size_t m = generation_ids.front().size();
  const std::size_t k = judge_ids.size();
  for (std::size_t i = 0; i < n; ++i)
    if (generation_ids[i].size() != m)
      throw Error(ErrorKind::UnbalancedDesign,
                  "scenario '" + scenario_ids[i] + "' has " + std::to_string(generation_ids[i].size()) +
                      " generations but '" + scenario_ids.front() + "' has " + std::to_string(m));

  std::vector<double> scores(n * m * k, 0.0);
  std::vector<unsigned char> filled(n * m * k, 0);
  for (std::size_t r = 0; r < cells.size(); ++r) {
    const Cell& c = cells[r];
    const std::size_t at = (c.i * m + c.j) * k + c.l;
    if (filled[at])
      throw Error(ErrorKind::DuplicateCell,
                  "record " + std::to_string(r + 1) + " repeats cell (" + scenario_ids[c.i] + ", " +
                      generation_ids[c.i][c.j] + ", " + judge_ids[c.l] + ")");
    filled[at] = 1;
    scores[at] = c.score;
  }
  for (std::size_t at = 0; at < filled.size(); ++at) {
    if (filled[at]) continue;
    const std::size_t l = at % k, j = (at / k) % m, i = at / (k * m);
    throw Error(ErrorKind::MissingCell, "no score for cell (" + scenario_ids[i] + ", " +
                                            generation_ids[i][j] + ", " + judge_ids[l] + ")");
  }
  return ScoreTensor(std::move(scores), std::move(scenario_ids), std::move(generation_ids),
                     std::move(judge_ids), scale_min, scale_max);
}

namespace {

// RFC 4180 field splitting; quoted fields may contain commas and doubled quotes.
std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t p = 0; p < line.size(); ++p) {
    const char ch = line[p];
    if (quoted) {
      if (ch == '"') {
        if (p + 1 < line.size() && line[p + 1] == '"') {
          cur += '"';
          ++p;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"' && cur.empty()) {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (quoted) throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": unterminated quote");
  fields.push_back(std::move(cur));
  return fields;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

double parse_score(const std::string& text, std::size_t line_no) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  while (last > first && (last[-1] == ' ' || last[-1] == '\t')) --last;
  if (first < last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last || !std::isfinite(value))
    throw Error(ErrorKind::Parse,
                "line " + std::to_string(line_no) + ": score '" + text + "' is not a finite number");
  return value;
}

}  // namespace

std::vector<ScoreRecord> read_records_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<ScoreRecord> out;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line.empty()) continue;
    auto fields = split_csv_line(line, line_no);
    if (!header_seen) {
      if (fields != std::vector<std::string>{"scenario_id", "generation_id", "judge_id", "score"})
        throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) +
                                          ": expected header scenario_id,generation_id,judge_id,score");
      header_seen = true;
      continue;
    }
    if (fields.size() != 4)
      throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected 4 fields, got " +
                                        std::to_string(fields.size()));
    out.push_back({std::move(fields[0]), std::move(fields[1]), std::move(fields[2]),
                   parse_score(fields[3], line_no)});
  }
  if (!header_seen) throw Error(ErrorKind::Parse, "empty score file");
  return out;
}

void write_records_csv(std::ostream& out, std::span<const ScoreRecord> records) {
  out << "scenario_id,generation_id,judge_id,score\n";
  for (const auto& r : records)
    out << csv_field(r.scenario_id) << ',' << csv_field(r.generation_id) << ','
        << csv_field(r.judge_id) << ',' << format_double(r.score) << '\n';
}

std::vector<ScoreRecord> read_records_json(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, e.what());
  }
  if (!doc.is_array()) throw Error(ErrorKind::Parse, "expected a JSON array of records");
  std::vector<ScoreRecord> out;
  out.reserve(doc.size());
  for (std::size_t r = 0; r < doc.size(); ++r) {
    const auto& obj = doc[r];
    try {
      auto label = [&](const char* key) {
        const auto& v = obj.at(key);
        return v.is_string() ? v.get<std::string>() : v.dump();
      };
      const auto& score = obj.at("score");
      if (!score.is_number()) throw Error(ErrorKind::Parse, "score is not a number");
      out.push_back({label("scenario_id"), label("generation_id"), label("judge_id"),
                     score.get<double>()});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Parse, "record " + std::to_string(r + 1) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorKind::Parse, "record " + std::to_string(r + 1) + ": " + e.what());
    }
  }
  return out;
}

void write_records_json(std::ostream& out, std::span<const ScoreRecord> records) {
  // Emitted by hand so scores use the same shortest round-trip form as CSV.
  out << "[\n";
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    out << "  {\"scenario_id\": " << nlohmann::json(rec.scenario_id).dump()
        << ", \"generation_id\": " << nlohmann::json(rec.generation_id).dump()
        << ", \"judge_id\": " << nlohmann::json(rec.judge_id).dump()
        << ", \"score\": " << format_double(rec.score) << '}' << (r + 1 < records.size() ? ",\n" : "\n");
  }
  out << "]\n";
}

ScoreTensor load_scores(const std::string& path, double scale_min, double scale_max) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Parse, "cannot open '" + path + "'");
  const bool json = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
  const auto records = json ? read_records_json(in) : read_records_csv(in);
  return ingest_records(records, scale_min, scale_max);
}

double grand_mean(const ScoreTensor& tensor) {
  return simd::sum(tensor.values()) / static_cast<double>(tensor.cells());
}

}  // namespace judgevar
