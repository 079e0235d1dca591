#include "pathline/data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace pathline {

std::string to_string(Split s) { return s == Split::Train ? "train" : "test"; }

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "test") return Split::Test;
  throw std::invalid_argument("unknown split: " + s);
}

std::vector<std::size_t> Dataset::class_counts(bool train_split) const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
  const std::size_t lo = train_split ? 0 : n_train;
  const std::size_t hi = train_split ? n_train : size();
  for (std::size_t i = lo; i < hi; ++i)
    ++counts[static_cast<std::size_t>(labels[i])];
  return counts;
}

void Dataset::validate() const {
  if (static_cast<std::size_t>(features.rows()) != labels.size())
    throw std::invalid_argument("dataset: feature rows != label count");
  if (n_train + n_test != labels.size())
    throw std::invalid_argument("dataset: split sizes do not sum to row count");
  if (num_classes < 2) throw std::invalid_argument("dataset: need >= 2 classes");
  for (int l : labels)
    if (l < 0 || l >= num_classes)
      throw std::invalid_argument("dataset: label " + std::to_string(l) +
                                  " out of range");
  if (!features.allFinite())
    throw std::invalid_argument("dataset: non-finite feature value");
}

std::uint64_t Dataset::digest() const {
  Fnv1a h;
  h.update("dataset-v1");
  h.update_i64(static_cast<std::int64_t>(n_train));
  h.update_i64(static_cast<std::int64_t>(n_test));
  h.update_i64(num_classes);
  h.update_i64(features.cols());
  for (Eigen::Index i = 0; i < features.rows(); ++i)
    for (Eigen::Index j = 0; j < features.cols(); ++j)
      h.update_double(features(i, j));
  for (int l : labels) h.update_i64(l);
  h.update(provenance);
  return h.value();
}

void AugmentSpec::validate() const {
  if (!std::isfinite(sigma) || sigma < 0.0)
    throw std::invalid_argument("augment: sigma must be finite and >= 0");
}

std::string AugmentSpec::to_string() const {
  if (kind == Kind::None) return "none";
  return "jitter:" + format_double(sigma);
}

AugmentSpec AugmentSpec::parse(const std::string& text) {
  AugmentSpec s;
  if (text == "none") return s;
  if (text.rfind("jitter:", 0) == 0) {
    s.kind = Kind::GaussianJitter;
    s.sigma = parse_double(std::string_view(text).substr(7));
    s.validate();
    return s;
  }
  throw std::invalid_argument("augment: cannot parse '" + text + "'");
}

Eigen::Vector2d spiral_point(double t, int cls) {
  const double r = 2.0 * std::sqrt(t);
  const double angle =
      8.0 * std::sqrt(t) * std::numbers::pi + (cls == 1 ? std::numbers::pi : 0.0);
  return {r * std::cos(angle), r * std::sin(angle)};
}

namespace {

// Rows alternate class 0 / class 1, so class 0 carries the remainder of an
// odd split and every prefix stays near-balanced.
int alternating_class(std::size_t i) { return static_cast<int>(i % 2); }

void check_sizes(std::size_t n_train, std::size_t n_test) {
  if (n_train == 0 || n_test == 0)
    throw std::invalid_argument("dataset: split sizes must be > 0");
}

}  // namespace

Dataset spiral(std::size_t n_train, std::size_t n_test, double sigma,
               std::uint64_t seed) {
  check_sizes(n_train, n_test);
  if (!std::isfinite(sigma) || sigma < 0.0)
    throw std::invalid_argument("spiral: sigma must be finite and >= 0");
  Dataset d;
  d.n_train = n_train;
  d.n_test = n_test;
  d.num_classes = 2;
  d.features.resize(static_cast<Eigen::Index>(n_train + n_test), 2);
  d.labels.resize(n_train + n_test);

  // Separate streams per split: resizing one split never changes the other's
  // draws for a fixed seed.
  const auto fill = [&](std::size_t offset, std::size_t n, std::string_view tag) {
    RngStream stream(derive_seed(seed, tag));
    for (std::size_t i = 0; i < n; ++i) {
      const int cls = alternating_class(i);
      const double t = stream.uniform();
      const double nx = stream.normal();
      const double ny = stream.normal();
      const Eigen::Vector2d p = spiral_point(t, cls);
      const Eigen::Index row = static_cast<Eigen::Index>(offset + i);
      d.features(row, 0) = p.x() + sigma * nx;
      d.features(row, 1) = p.y() + sigma * ny;
      d.labels[offset + i] = cls;
    }
  };
  fill(0, n_train, "spiral-train");
  fill(n_train, n_test, "spiral-test");

  std::ostringstream os;
  os << "spiral(n_train=" << n_train << ",n_test=" << n_test
     << ",sigma=" << format_double(sigma) << ",seed=" << seed << ")";
  d.provenance = os.str();
  return d;
}

Dataset blobs(std::size_t n_train, std::size_t n_test, double separation,
              double sigma, std::uint64_t seed) {
  check_sizes(n_train, n_test);
  if (!std::isfinite(separation) || separation < 0.0)
    throw std::invalid_argument("blobs: separation must be finite and >= 0");
  if (!std::isfinite(sigma) || sigma < 0.0)
    throw std::invalid_argument("blobs: sigma must be finite and >= 0");
  Dataset d;
  d.n_train = n_train;
  d.n_test = n_test;
  d.num_classes = 2;
  d.features.resize(static_cast<Eigen::Index>(n_train + n_test), 2);
  d.labels.resize(n_train + n_test);

  const double half = separation / 2.0;
  const auto fill = [&](std::size_t offset, std::size_t n, std::string_view tag) {
    RngStream stream(derive_seed(seed, tag));
    for (std::size_t i = 0; i < n; ++i) {
      const int cls = alternating_class(i);
      const double cx = cls == 0 ? -half : half;
      const Eigen::Index row = static_cast<Eigen::Index>(offset + i);
      d.features(row, 0) = cx + sigma * stream.normal();
      d.features(row, 1) = sigma * stream.normal();
      d.labels[offset + i] = cls;
    }
  };
  fill(0, n_train, "blobs-train");
  fill(n_train, n_test, "blobs-test");

  std::ostringstream os;
  os << "blobs(n_train=" << n_train << ",n_test=" << n_test
     << ",separation=" << format_double(separation)
     << ",sigma=" << format_double(sigma) << ",seed=" << seed << ")";
  d.provenance = os.str();
  return d;
}

Dataset corrupt_labels(const Dataset& data, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("corrupt_labels: p must lie in [0, 1]");
  data.validate();
  const std::size_t k = static_cast<std::size_t>(
      std::llround(p * static_cast<double>(data.n_train)));
  if (k == 0) return data;

  std::vector<std::size_t> idx(data.n_train);
  std::iota(idx.begin(), idx.end(), 0);
  RngStream pick(derive_seed(seed, "corrupt-pick"));
  pick.shuffle(idx);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());

  Dataset out = data;
  RngStream draw(derive_seed(seed, "corrupt-label"));
  for (std::size_t i : idx)
    out.labels[i] = static_cast<int>(
        draw.index(static_cast<std::uint64_t>(data.num_classes)));

  std::ostringstream os;
  os << data.provenance << ";corrupt(p=" << format_double(p) << ",seed=" << seed
     << ")";
  out.provenance = os.str();
  return out;
}

Dataset subset(const Dataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw std::invalid_argument("subset: fraction must lie in (0, 1]");
  data.validate();
  if (fraction == 1.0) return data;

  const std::size_t keep = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(data.n_train)));

  // Largest-remainder allocation of `keep` across classes, proportional to
  // the class counts; ties go to the lower class index.
  const auto counts = data.class_counts(true);
  const std::size_t classes = counts.size();
  std::vector<std::size_t> alloc(classes, 0);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    const double target = fraction * static_cast<double>(counts[c]);
    alloc[c] = std::min(counts[c], static_cast<std::size_t>(std::floor(target)));
    assigned += alloc[c];
    remainders.emplace_back(target - std::floor(target), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < keep; r = (r + 1) % classes) {
    const std::size_t c = remainders[r % remainders.size()].second;
    if (alloc[c] < counts[c]) {
      ++alloc[c];
      ++assigned;
    }
  }

  std::vector<std::size_t> chosen;
  chosen.reserve(keep);
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < data.n_train; ++i)
      if (static_cast<std::size_t>(data.labels[i]) == c) members.push_back(i);
    RngStream stream(derive_seed(seed, "subset", static_cast<std::uint64_t>(c)));
    stream.shuffle(members);
    members.resize(alloc[c]);
    chosen.insert(chosen.end(), members.begin(), members.end());
  }
  std::sort(chosen.begin(), chosen.end());

  Dataset out;
  out.n_train = chosen.size();
  out.n_test = data.n_test;
  out.num_classes = data.num_classes;
  out.features.resize(static_cast<Eigen::Index>(out.n_train + out.n_test),
                      data.features.cols());
  out.labels.resize(out.n_train + out.n_test);
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) =
        data.features.row(static_cast<Eigen::Index>(chosen[i]));
    out.labels[i] = data.labels[chosen[i]];
  }
  out.features.bottomRows(static_cast<Eigen::Index>(out.n_test)) =
      data.features.bottomRows(static_cast<Eigen::Index>(out.n_test));
  std::copy(data.labels.begin() + static_cast<std::ptrdiff_t>(data.n_train),
            data.labels.end(),
            out.labels.begin() + static_cast<std::ptrdiff_t>(out.n_train));

  std::ostringstream os;
  os << data.provenance << ";subset(fraction=" << format_double(fraction)
     << ",seed=" << seed << ")";
  out.provenance = os.str();
  return out;
}

Eigen::MatrixXd augment(const Eigen::Ref<const Eigen::MatrixXd>& batch,
                        const AugmentSpec& spec, RngStream& stream) {
  spec.validate();
  if (spec.kind == AugmentSpec::Kind::None || spec.sigma == 0.0) return batch;
  Eigen::MatrixXd out = batch;
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      out(i, j) += spec.sigma * stream.normal();
  return out;
}

void export_csv(const Dataset& data, const std::filesystem::path& path) {
  data.validate();
  std::ostringstream os;
  os << "# provenance: " << data.provenance << "\n";
  os << "# n_train: " << data.n_train << "\n";
  os << "# n_test: " << data.n_test << "\n";
  os << "# num_classes: " << data.num_classes << "\n";
  for (int j = 0; j < data.dim(); ++j) os << "x" << j << ",";
  os << "label\n";
  for (Eigen::Index i = 0; i < data.features.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.features.cols(); ++j)
      os << format_double(data.features(i, j)) << ",";
    os << data.labels[static_cast<std::size_t>(i)] << "\n";
  }
  write_file_atomic(path, os.str());
}

namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

Dataset import_csv(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  std::istringstream in(content);
  Dataset d;
  bool have_n_train = false, have_n_test = false;
  std::string line;
  int dim = -1;
  std::vector<std::vector<double>> rows;

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto colon = line.find(": ");
      if (colon == std::string::npos) continue;
      const std::string key = line.substr(2, colon - 2);
      const std::string value = line.substr(colon + 2);
      if (key == "provenance") d.provenance = value;
      else if (key == "n_train") {
        d.n_train = static_cast<std::size_t>(std::stoull(value));
        have_n_train = true;
      } else if (key == "n_test") {
        d.n_test = static_cast<std::size_t>(std::stoull(value));
        have_n_test = true;
      } else if (key == "num_classes") {
        d.num_classes = std::stoi(value);
      }
      continue;
    }
    const auto cells = split_commas(line);
    if (dim < 0) {
      // Header row: x0,...,x{d-1},label.
      if (cells.empty() || cells.back() != "label")
        throw std::invalid_argument("csv: header must end with 'label': " +
                                    path.string());
      dim = static_cast<int>(cells.size()) - 1;
      continue;
    }
    if (static_cast<int>(cells.size()) != dim + 1)
      throw std::invalid_argument("csv: row with wrong cell count in " +
                                  path.string());
    std::vector<double> row(static_cast<std::size_t>(dim) + 1);
    for (int j = 0; j < dim; ++j)
      row[static_cast<std::size_t>(j)] = parse_double(cells[static_cast<std::size_t>(j)]);
    row.back() = static_cast<double>(std::stoi(cells.back()));
    rows.push_back(std::move(row));
  }
  if (dim < 0) throw std::invalid_argument("csv: no header row in " + path.string());
  if (!have_n_train || !have_n_test)
    throw std::invalid_argument("csv: missing split metadata in " + path.string());

  d.features.resize(static_cast<Eigen::Index>(rows.size()), dim);
  d.labels.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int j = 0; j < dim; ++j)
      d.features(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
    d.labels[i] = static_cast<int>(rows[i].back());
  }
  d.validate();
  return d;
}

}  // namespace pathline
