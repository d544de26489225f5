#include "seqcl/data.hpp"

#include "seqcl/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

namespace seqcl {

namespace {

// Generator internals. The latent dimension and noise scales are fixed; the
// spec-facing knobs are sample count, dims, lengths, ratios, and separation.
constexpr Index kLatentDim = 8;
constexpr double kSpectralRadius = 0.7;
constexpr double kDriftGain = 0.38;
constexpr double kProcessNoise = 0.4;
constexpr double kObsNoise = 1.0;
// Per-sample random effect: a constant latent drift drawn once per sample,
// label-independent, so the population is heterogeneous beyond its labels.
constexpr double kNuisanceDrift = 0.30;

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& s, const std::string& path, long line_no) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw ValidationError(path + ":" + std::to_string(line_no) +
                          ": cannot parse '" + s + "' as a finite number");
  }
  return v;
}

long long parse_int(const std::string& s, const std::string& path, long line_no) {
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw ValidationError(path + ":" + std::to_string(line_no) +
                          ": cannot parse '" + s + "' as an integer");
  }
  return v;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw RuntimeFailure("cannot open " + path);
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    lines.push_back(line);
  }
  if (lines.empty()) {
    throw ValidationError(path + ": empty file");
  }
  return lines;
}

void append_double(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace

void validate(const Dataset& data) {
  if (data.samples.empty()) {
    throw ValidationError("dataset: empty");
  }
  for (const SequenceSample& s : data.samples) {
    if (s.series.rows() < 1) {
      throw ValidationError("dataset: sample " + s.id + " has no timesteps");
    }
    if (s.series.cols() != data.feature_dim) {
      throw ValidationError("dataset: sample " + s.id + " has " +
                            std::to_string(s.series.cols()) +
                            " features, expected " +
                            std::to_string(data.feature_dim));
    }
    if (s.statics.size() != data.static_dim) {
      throw ValidationError("dataset: sample " + s.id +
                            " static feature count mismatch");
    }
    if (s.labels.size() != data.num_classes) {
      throw ValidationError("dataset: sample " + s.id + " label count mismatch");
    }
    for (Index c = 0; c < s.labels.size(); ++c) {
      if (s.labels[c] != 0.0 && s.labels[c] != 1.0) {
        throw ValidationError("dataset: sample " + s.id +
                              " has a non-binary label");
      }
    }
    if (!s.series.allFinite()) {
      throw ValidationError("dataset: sample " + s.id +
                            " has non-finite series values");
    }
  }
}

double positive_ratio(const Dataset& data, Index class_idx) {
  if (class_idx < 0 || class_idx >= data.num_classes) {
    throw ValidationError("positive_ratio: class index out of range");
  }
  double pos = 0.0;
  for (const SequenceSample& s : data.samples) {
    pos += s.labels[class_idx];
  }
  return pos / static_cast<double>(data.size());
}

std::uint64_t dataset_hash(const Dataset& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto feed = [&h](const void* ptr, std::size_t bytes) {
    const unsigned char* p = static_cast<const unsigned char*>(ptr);
    for (std::size_t i = 0; i < bytes; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ull;
    }
  };
  for (const SequenceSample& s : data.samples) {
    feed(s.id.data(), s.id.size());
    const Index t = s.series.rows();
    feed(&t, sizeof(t));
    feed(s.series.data(), sizeof(double) * static_cast<std::size_t>(s.series.size()));
    feed(s.statics.data(), sizeof(double) * static_cast<std::size_t>(s.statics.size()));
    feed(s.labels.data(), sizeof(double) * static_cast<std::size_t>(s.labels.size()));
  }
  return h;
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  const Index n = spec.n_samples;
  const Index d = spec.feature_dim;
  const Index c = spec.num_classes;
  if (n < 2 || d < 1 || c < 1) {
    throw ValidationError("generate_synthetic: need n >= 2, D >= 1, C >= 1");
  }
  if (spec.t_min < 1 || spec.t_min > spec.t_max) {
    throw ValidationError("generate_synthetic: need 1 <= t_min <= t_max");
  }
  if (spec.pos_ratio.size() != 1 &&
      spec.pos_ratio.size() != static_cast<std::size_t>(c)) {
    throw ValidationError(
        "generate_synthetic: pos_ratio needs one entry or one per class");
  }
  std::vector<long long> pos_count(static_cast<std::size_t>(c));
  for (Index j = 0; j < c; ++j) {
    const double ratio = spec.pos_ratio.size() == 1
                             ? spec.pos_ratio[0]
                             : spec.pos_ratio[static_cast<std::size_t>(j)];
    if (!(ratio > 0.0 && ratio < 1.0)) {
      throw ValidationError("generate_synthetic: pos_ratio must be in (0, 1)");
    }
    const long long p = std::llround(static_cast<double>(n) * ratio);
    if (p <= 0 || p >= n) {
      throw ValidationError("generate_synthetic: class " + std::to_string(j) +
                            " would be degenerate (all one label)");
    }
    pos_count[static_cast<std::size_t>(j)] = p;
  }
  if (!(spec.separation >= 0.0)) {
    throw ValidationError("generate_synthetic: separation must be >= 0");
  }

  Rng rng(spec.seed);

  // Shared dynamics: transition scaled to a fixed spectral radius, a fixed
  // observation projection, and one unit drift direction per class.
  Eigen::MatrixXd transition(kLatentDim, kLatentDim);
  for (Index r = 0; r < kLatentDim; ++r) {
    for (Index q = 0; q < kLatentDim; ++q) {
      transition(r, q) = rng.normal();
    }
  }
  const double rho = transition.eigenvalues().cwiseAbs().maxCoeff();
  if (rho > 0.0) {
    transition *= kSpectralRadius / rho;
  }
  Eigen::MatrixXd projection(d, kLatentDim);
  for (Index r = 0; r < d; ++r) {
    for (Index q = 0; q < kLatentDim; ++q) {
      projection(r, q) = rng.normal() / std::sqrt(static_cast<double>(kLatentDim));
    }
  }
  std::vector<Eigen::VectorXd> drift_dir(static_cast<std::size_t>(c));
  for (Index j = 0; j < c; ++j) {
    Eigen::VectorXd dir(kLatentDim);
    for (Index q = 0; q < kLatentDim; ++q) {
      dir[q] = rng.normal();
    }
    drift_dir[static_cast<std::size_t>(j)] = dir.normalized();
  }

  // Labels: per class, exactly pos_count positives at shuffled positions.
  RealMatrix labels = RealMatrix::Zero(n, c);
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index j = 0; j < c; ++j) {
    std::iota(order.begin(), order.end(), Index{0});
    rng.shuffle(order);
    for (long long k = 0; k < pos_count[static_cast<std::size_t>(j)]; ++k) {
      labels(order[static_cast<std::size_t>(k)], j) = 1.0;
    }
  }

  const int id_width =
      static_cast<int>(std::to_string(static_cast<long long>(n)).size());

  Dataset data;
  data.feature_dim = d;
  data.static_dim = 0;
  data.num_classes = c;
  data.samples.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    SequenceSample sample;
    char idbuf[32];
    std::snprintf(idbuf, sizeof(idbuf), "s%0*lld", id_width,
                  static_cast<long long>(i + 1));
    sample.id = idbuf;
    sample.labels = labels.row(i).transpose();

    Eigen::VectorXd drift = Eigen::VectorXd::Zero(kLatentDim);
    for (Index j = 0; j < c; ++j) {
      drift += (2.0 * labels(i, j) - 1.0) * drift_dir[static_cast<std::size_t>(j)];
    }
    drift *= spec.separation * kDriftGain;
    for (Index q = 0; q < kLatentDim; ++q) {
      drift[q] += rng.normal() * kNuisanceDrift;
    }

    const Index t_len =
        static_cast<Index>(rng.uniform_int(spec.t_min, spec.t_max));
    Eigen::VectorXd state(kLatentDim);
    for (Index q = 0; q < kLatentDim; ++q) {
      state[q] = rng.normal();
    }
    sample.series.resize(t_len, d);
    for (Index t = 0; t < t_len; ++t) {
      Eigen::VectorXd noise(kLatentDim);
      for (Index q = 0; q < kLatentDim; ++q) {
        noise[q] = rng.normal() * kProcessNoise;
      }
      state = transition * state + drift + noise;
      Eigen::VectorXd obs = projection * state;
      for (Index f = 0; f < d; ++f) {
        sample.series(t, f) = obs[f] + rng.normal() * kObsNoise;
      }
    }
    data.samples.push_back(std::move(sample));
  }
  return data;
}

Dataset downsample_positives(const Dataset& data, Index class_idx,
                             double target_ratio, std::uint64_t seed) {
  validate(data);
  if (class_idx < 0 || class_idx >= data.num_classes) {
    throw ValidationError("downsample_positives: class index out of range");
  }
  std::vector<Index> pos_idx;
  std::vector<bool> keep(data.samples.size(), false);
  long long n_neg = 0;
  for (Index i = 0; i < data.size(); ++i) {
    if (data.samples[static_cast<std::size_t>(i)].labels[class_idx] == 1.0) {
      pos_idx.push_back(i);
    } else {
      keep[static_cast<std::size_t>(i)] = true;
      ++n_neg;
    }
  }
  const double current =
      static_cast<double>(pos_idx.size()) / static_cast<double>(data.size());
  if (!(target_ratio > 0.0) || target_ratio >= current) {
    throw ValidationError(
        "downsample_positives: target ratio must be in (0, current ratio)");
  }
  const long long p = std::llround(target_ratio * static_cast<double>(n_neg) /
                                   (1.0 - target_ratio));
  if (p < 1) {
    throw ValidationError(
        "downsample_positives: target ratio keeps zero positives");
  }

  Rng rng(seed);
  rng.shuffle(pos_idx);
  for (long long k = 0; k < p; ++k) {
    keep[static_cast<std::size_t>(pos_idx[static_cast<std::size_t>(k)])] = true;
  }

  Dataset out;
  out.feature_dim = data.feature_dim;
  out.static_dim = data.static_dim;
  out.num_classes = data.num_classes;
  for (Index i = 0; i < data.size(); ++i) {
    if (keep[static_cast<std::size_t>(i)]) {
      out.samples.push_back(data.samples[static_cast<std::size_t>(i)]);
    }
  }
  return out;
}

Dataset load_csv(const std::string& series_path, const std::string& labels_path,
                 const std::optional<std::string>& static_path) {
  // --- series ---
  const std::vector<std::string> series_lines = read_lines(series_path);
  const std::vector<std::string> header = split_line(series_lines[0]);
  if (header.size() < 3 || header[0] != "id" || header[1] != "t") {
    throw ValidationError(series_path + ": header must be id,t,f1..fD");
  }
  const Index d = static_cast<Index>(header.size()) - 2;

  struct Row {
    long long t;
    RealVector values;
  };
  std::vector<std::string> id_order;
  std::map<std::string, std::vector<Row>> rows_by_id;
  for (std::size_t li = 1; li < series_lines.size(); ++li) {
    if (series_lines[li].empty()) {
      continue;
    }
    const std::vector<std::string> f = split_line(series_lines[li]);
    if (static_cast<Index>(f.size()) != d + 2) {
      throw ValidationError(series_path + ":" + std::to_string(li + 1) +
                            ": expected " + std::to_string(d + 2) + " fields");
    }
    Row row;
    row.t = parse_int(f[1], series_path, static_cast<long>(li + 1));
    row.values.resize(d);
    for (Index j = 0; j < d; ++j) {
      row.values[j] = parse_double(f[static_cast<std::size_t>(j) + 2],
                                   series_path, static_cast<long>(li + 1));
    }
    auto it = rows_by_id.find(f[0]);
    if (it == rows_by_id.end()) {
      id_order.push_back(f[0]);
      it = rows_by_id.emplace(f[0], std::vector<Row>{}).first;
    }
    it->second.push_back(std::move(row));
  }
  if (id_order.empty()) {
    throw ValidationError(series_path + ": no data rows");
  }

  // Timesteps must be 1..T_i with no gaps or duplicates.
  std::vector<std::string> bad_ids;
  for (const std::string& id : id_order) {
    std::vector<Row>& rows = rows_by_id[id];
    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.t < b.t; });
    bool ok = true;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (rows[k].t != static_cast<long long>(k) + 1) {
        ok = false;
        break;
      }
    }
    if (!ok) {
      bad_ids.push_back(id);
    }
  }
  if (!bad_ids.empty()) {
    std::string msg = series_path + ": non-contiguous timesteps for id(s): ";
    for (std::size_t k = 0; k < bad_ids.size() && k < 10; ++k) {
      msg += (k ? ", " : "") + bad_ids[k];
    }
    if (bad_ids.size() > 10) {
      msg += ", ... (" + std::to_string(bad_ids.size()) + " total)";
    }
    throw ValidationError(msg);
  }

  // --- labels ---
  const std::vector<std::string> label_lines = read_lines(labels_path);
  const std::vector<std::string> lheader = split_line(label_lines[0]);
  if (lheader.size() < 2 || lheader[0] != "id") {
    throw ValidationError(labels_path + ": header must be id,y1..yC");
  }
  const Index c = static_cast<Index>(lheader.size()) - 1;
  std::map<std::string, RealVector> labels_by_id;
  for (std::size_t li = 1; li < label_lines.size(); ++li) {
    if (label_lines[li].empty()) {
      continue;
    }
    const std::vector<std::string> f = split_line(label_lines[li]);
    if (static_cast<Index>(f.size()) != c + 1) {
      throw ValidationError(labels_path + ":" + std::to_string(li + 1) +
                            ": expected " + std::to_string(c + 1) + " fields");
    }
    RealVector y(c);
    for (Index j = 0; j < c; ++j) {
      const std::string& field = f[static_cast<std::size_t>(j) + 1];
      if (field != "0" && field != "1") {
        throw ValidationError(labels_path + ":" + std::to_string(li + 1) +
                              ": label value '" + field + "' is not 0 or 1");
      }
      y[j] = field == "1" ? 1.0 : 0.0;
    }
    if (!labels_by_id.emplace(f[0], std::move(y)).second) {
      throw ValidationError(labels_path + ":" + std::to_string(li + 1) +
                            ": duplicate id " + f[0]);
    }
  }

  // --- optional statics ---
  Index d_s = 0;
  std::map<std::string, RealVector> statics_by_id;
  if (static_path.has_value()) {
    const std::vector<std::string> static_lines = read_lines(*static_path);
    const std::vector<std::string> sheader = split_line(static_lines[0]);
    if (sheader.size() < 2 || sheader[0] != "id") {
      throw ValidationError(*static_path + ": header must be id,s1..sD_S");
    }
    d_s = static_cast<Index>(sheader.size()) - 1;
    for (std::size_t li = 1; li < static_lines.size(); ++li) {
      if (static_lines[li].empty()) {
        continue;
      }
      const std::vector<std::string> f = split_line(static_lines[li]);
      if (static_cast<Index>(f.size()) != d_s + 1) {
        throw ValidationError(*static_path + ":" + std::to_string(li + 1) +
                              ": expected " + std::to_string(d_s + 1) +
                              " fields");
      }
      RealVector s(d_s);
      for (Index j = 0; j < d_s; ++j) {
        s[j] = parse_double(f[static_cast<std::size_t>(j) + 1], *static_path,
                            static_cast<long>(li + 1));
      }
      statics_by_id.emplace(f[0], std::move(s));
    }
  }

  Dataset data;
  data.feature_dim = d;
  data.static_dim = d_s;
  data.num_classes = c;
  for (const std::string& id : id_order) {
    const std::vector<Row>& rows = rows_by_id[id];
    SequenceSample sample;
    sample.id = id;
    sample.series.resize(static_cast<Index>(rows.size()), d);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      sample.series.row(static_cast<Index>(k)) = rows[k].values.transpose();
    }
    const auto yit = labels_by_id.find(id);
    if (yit == labels_by_id.end()) {
      throw ValidationError(labels_path + ": no labels for id " + id);
    }
    sample.labels = yit->second;
    if (static_path.has_value()) {
      const auto sit = statics_by_id.find(id);
      if (sit == statics_by_id.end()) {
        throw ValidationError(*static_path + ": no static features for id " + id);
      }
      sample.statics = sit->second;
    }
    data.samples.push_back(std::move(sample));
  }
  validate(data);
  return data;
}

void save_csv(const Dataset& data, const std::string& series_path,
              const std::string& labels_path,
              const std::optional<std::string>& static_path) {
  validate(data);
  if (data.static_dim > 0 && !static_path.has_value()) {
    throw ValidationError("save_csv: dataset has static features but no path given");
  }

  std::string series = "id,t";
  for (Index j = 0; j < data.feature_dim; ++j) {
    series += ",f" + std::to_string(j + 1);
  }
  series += "\n";
  for (const SequenceSample& s : data.samples) {
    for (Index t = 0; t < s.series.rows(); ++t) {
      series += s.id + "," + std::to_string(t + 1);
      for (Index j = 0; j < data.feature_dim; ++j) {
        series += ",";
        append_double(series, s.series(t, j));
      }
      series += "\n";
    }
  }

  std::string labels = "id";
  for (Index j = 0; j < data.num_classes; ++j) {
    labels += ",y" + std::to_string(j + 1);
  }
  labels += "\n";
  for (const SequenceSample& s : data.samples) {
    labels += s.id;
    for (Index j = 0; j < data.num_classes; ++j) {
      labels += s.labels[j] == 1.0 ? ",1" : ",0";
    }
    labels += "\n";
  }

  auto write_file = [](const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
      throw RuntimeFailure("cannot open " + path + " for writing");
    }
    out << content;
    if (!out) {
      throw RuntimeFailure("write failed for " + path);
    }
  };
  write_file(series_path, series);
  write_file(labels_path, labels);

  if (static_path.has_value() && data.static_dim > 0) {
    std::string statics = "id";
    for (Index j = 0; j < data.static_dim; ++j) {
      statics += ",s" + std::to_string(j + 1);
    }
    statics += "\n";
    for (const SequenceSample& s : data.samples) {
      statics += s.id;
      for (Index j = 0; j < data.static_dim; ++j) {
        statics += ",";
        append_double(statics, s.statics[j]);
      }
      statics += "\n";
    }
    write_file(*static_path, statics);
  }
}

Splits split(const Dataset& data, const SplitFractions& fractions,
             std::optional<Index> stratify_class, std::uint64_t seed) {
  validate(data);
  const double sum = fractions.train + fractions.val + fractions.test;
  if (fractions.train <= 0.0 || fractions.val <= 0.0 || fractions.test <= 0.0 ||
      std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError("split: fractions must be positive and sum to 1");
  }
  const Index n = data.size();
  const Index n_train = static_cast<Index>(
      std::llround(fractions.train * static_cast<double>(n)));
  const Index n_val =
      static_cast<Index>(std::llround(fractions.val * static_cast<double>(n)));
  const Index n_test = n - n_train - n_val;
  if (n_train < 1 || n_val < 1 || n_test < 1) {
    throw ValidationError("split: a split would be empty");
  }

  Rng rng(seed);
  std::vector<Index> assign(static_cast<std::size_t>(n));  // 0 train, 1 val, 2 test

  if (!stratify_class.has_value()) {
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    rng.shuffle(order);
    for (Index k = 0; k < n; ++k) {
      const Index part = k < n_train ? 0 : (k < n_train + n_val ? 1 : 2);
      assign[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = part;
    }
  } else {
    const Index cls = *stratify_class;
    if (cls < 0 || cls >= data.num_classes) {
      throw ValidationError("split: stratify class out of range");
    }
    std::vector<Index> pos;
    std::vector<Index> neg;
    for (Index i = 0; i < n; ++i) {
      (data.samples[static_cast<std::size_t>(i)].labels[cls] == 1.0 ? pos : neg)
          .push_back(i);
    }
    rng.shuffle(pos);
    rng.shuffle(neg);
    const Index n_pos = static_cast<Index>(pos.size());
    const Index p_train = static_cast<Index>(
        std::llround(fractions.train * static_cast<double>(n_pos)));
    const Index p_val = static_cast<Index>(
        std::llround(fractions.val * static_cast<double>(n_pos)));
    const Index p_test = n_pos - p_train - p_val;
    const Index g_train = n_train - p_train;
    const Index g_val = n_val - p_val;
    const Index g_test = n_test - p_test;
    if (p_test < 0 || g_train < 0 || g_val < 0 || g_test < 0) {
      throw ValidationError("split: stratified allocation is infeasible");
    }
    for (Index k = 0; k < n_pos; ++k) {
      const Index part = k < p_train ? 0 : (k < p_train + p_val ? 1 : 2);
      assign[static_cast<std::size_t>(pos[static_cast<std::size_t>(k)])] = part;
    }
    for (Index k = 0; k < static_cast<Index>(neg.size()); ++k) {
      const Index part = k < g_train ? 0 : (k < g_train + g_val ? 1 : 2);
      assign[static_cast<std::size_t>(neg[static_cast<std::size_t>(k)])] = part;
    }
  }

  Splits out;
  for (Dataset* part : {&out.train, &out.val, &out.test}) {
    part->feature_dim = data.feature_dim;
    part->static_dim = data.static_dim;
    part->num_classes = data.num_classes;
  }
  for (Index i = 0; i < n; ++i) {
    Dataset& target = assign[static_cast<std::size_t>(i)] == 0
                          ? out.train
                          : (assign[static_cast<std::size_t>(i)] == 1 ? out.val
                                                                      : out.test);
    target.samples.push_back(data.samples[static_cast<std::size_t>(i)]);
  }
  return out;
}

}  // namespace seqcl
