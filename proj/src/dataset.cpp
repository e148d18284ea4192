#include "hamr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace hamr {

std::vector<int> LabeledDataset::ids_of(Split s) const {
  std::vector<int> ids;
  for (std::size_t i = 0; i < splits.size(); ++i)
    if (splits[i] == s) ids.push_back(static_cast<int>(i));
  return ids;
}

std::vector<std::int64_t> LabeledDataset::class_counts(Split s) const {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (std::size_t i = 0; i < examples.size(); ++i)
    if (splits[i] == s) counts[static_cast<std::size_t>(example_label(examples[i]))]++;
  return counts;
}

std::vector<std::int64_t> LabeledDataset::token_class_counts(Split s) const {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (std::size_t i = 0; i < examples.size(); ++i)
    if (splits[i] == s)
      for (int l : examples[i].labels) counts[static_cast<std::size_t>(l)]++;
  return counts;
}

void LabeledDataset::validate() const {
  if (examples.empty()) throw DataError("dataset is empty");
  if (splits.size() != examples.size()) throw DataError("split manifest misaligned");
  auto train_counts = class_counts(Split::Train);
  for (int c = 0; c < num_classes; ++c)
    if (train_counts[static_cast<std::size_t>(c)] == 0)
      throw DataError("class " + std::to_string(c) + " absent from the train split");
  for (const auto& e : examples) {
    if (e.rows.empty()) throw DataError("example " + std::to_string(e.id) + " has no rows");
    for (const auto& row : e.rows)
      if (static_cast<int>(row.size()) != feature_dim)
        throw DataError("example " + std::to_string(e.id) + " has a bad feature row");
    for (int l : e.labels)
      if (l < 0 || l >= num_classes)
        throw DataError("example " + std::to_string(e.id) + " has an unknown class id");
  }
  if (embeddings && embeddings->n != examples.size())
    throw DataError("embedding sidecar row count does not match the dataset");
}

int example_label(const Example& e) {
  std::map<int, int> freq;
  for (int l : e.labels) freq[l]++;
  int best = e.labels[0], best_count = 0;
  for (const auto& [label, count] : freq) {
    if (count > best_count) {  // map iteration is ascending, ties keep lower id
      best = label;
      best_count = count;
    }
  }
  return best;
}

EmbeddingMatrix dataset_embeddings(const LabeledDataset& ds, Metric metric) {
  if (ds.embeddings) {
    EmbeddingMatrix emb = *ds.embeddings;
    emb.metric = metric;
    return emb;
  }
  EmbeddingMatrix emb;
  emb.n = ds.examples.size();
  emb.dim = static_cast<std::size_t>(ds.feature_dim);
  emb.metric = metric;
  emb.data.assign(emb.n * emb.dim, 0.0);
  for (std::size_t i = 0; i < emb.n; ++i) {
    const auto& rows = ds.examples[i].rows;
    double* out = emb.data.data() + i * emb.dim;
    for (const auto& row : rows)
      for (std::size_t d = 0; d < emb.dim; ++d) out[d] += row[d];
    for (std::size_t d = 0; d < emb.dim; ++d) out[d] /= static_cast<double>(rows.size());
  }
  return emb;
}

namespace {

Split parse_split(const std::string& s, int line) {
  if (s == "train") return Split::Train;
  if (s == "valid") return Split::Valid;
  if (s == "test") return Split::Test;
  throw DataError("line " + std::to_string(line) + ": unknown split '" + s + "'");
}

const char* split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Valid: return "valid";
    default: return "test";
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

double parse_num(const std::string& s, int line) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("line " + std::to_string(line) + ": bad number '" + s + "'");
  }
}

}  // namespace

LabeledDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file " + path);
  std::string header;
  if (!std::getline(in, header)) throw DataError("dataset file is empty: " + path);
  std::stringstream hs(header);
  std::string kind;
  long long n = 0, d = 0, c = 0;
  hs >> kind >> n >> d >> c;
  if ((kind != "CLS" && kind != "SEQ") || n <= 0 || d <= 0 || c <= 0)
    throw DataError("line 1: bad header '" + header + "'");

  LabeledDataset ds;
  ds.sequence = kind == "SEQ";
  ds.feature_dim = static_cast<int>(d);
  ds.num_classes = static_cast<int>(c);

  std::map<long long, std::size_t> group_index;  // group_id -> example index
  std::string line;
  int lineno = 1;
  long long rows_seen = 0;
  while (std::getline(in, line)) {
    lineno++;
    if (line.empty()) continue;
    auto fields = split_csv(line);
    std::size_t expected = ds.sequence ? 3 + static_cast<std::size_t>(d)
                                       : 2 + static_cast<std::size_t>(d);
    if (fields.size() != expected)
      throw DataError("line " + std::to_string(lineno) + ": expected " +
                      std::to_string(expected) + " columns, got " +
                      std::to_string(fields.size()));
    Split split = parse_split(fields[0], lineno);
    std::size_t base = ds.sequence ? 2 : 1;
    int label = static_cast<int>(parse_num(fields[base], lineno));
    if (label < 0 || label >= ds.num_classes)
      throw DataError("line " + std::to_string(lineno) + ": unknown class id " +
                      std::to_string(label));
    std::vector<double> row(static_cast<std::size_t>(d));
    for (long long j = 0; j < d; ++j)
      row[static_cast<std::size_t>(j)] = parse_num(fields[base + 1 + static_cast<std::size_t>(j)], lineno);

    if (ds.sequence) {
      long long gid = static_cast<long long>(parse_num(fields[1], lineno));
      auto it = group_index.find(gid);
      if (it == group_index.end()) {
        Example e;
        e.id = static_cast<int>(ds.examples.size());
        e.rows.push_back(std::move(row));
        e.labels.push_back(label);
        group_index[gid] = ds.examples.size();
        ds.examples.push_back(std::move(e));
        ds.splits.push_back(split);
      } else {
        if (ds.splits[it->second] != split)
          throw DataError("line " + std::to_string(lineno) +
                          ": group spans multiple splits");
        ds.examples[it->second].rows.push_back(std::move(row));
        ds.examples[it->second].labels.push_back(label);
      }
    } else {
      Example e;
      e.id = static_cast<int>(ds.examples.size());
      e.rows.push_back(std::move(row));
      e.labels.push_back(label);
      ds.examples.push_back(std::move(e));
      ds.splits.push_back(split);
    }
    rows_seen++;
  }
  if (rows_seen != n)
    throw DataError("header declares " + std::to_string(n) + " rows but file has " +
                    std::to_string(rows_seen));
  if (ds.ids_of(Split::Valid).empty()) throw DataError("validation split is empty");
  ds.validate();
  return ds;
}

void save_dataset(const std::string& path, const LabeledDataset& ds) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dataset file " + path);
  long long rows = 0;
  for (const auto& e : ds.examples) rows += static_cast<long long>(e.rows.size());
  out << (ds.sequence ? "SEQ" : "CLS") << ' ' << rows << ' ' << ds.feature_dim << ' '
      << ds.num_classes << '\n';
  out.precision(17);
  for (std::size_t i = 0; i < ds.examples.size(); ++i) {
    const Example& e = ds.examples[i];
    for (std::size_t t = 0; t < e.rows.size(); ++t) {
      out << split_name(ds.splits[i]) << ',';
      if (ds.sequence) out << e.id << ',';
      out << e.labels[t];
      for (double v : e.rows[t]) out << ',' << v;
      out << '\n';
    }
  }
}

EmbeddingMatrix load_embeddings(const std::string& path, Metric metric) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file " + path);
  std::string header;
  if (!std::getline(in, header)) throw DataError("embedding file is empty: " + path);
  std::stringstream hs(header);
  std::string kind;
  long long n = 0, e = 0;
  hs >> kind >> n >> e;
  if (kind != "EMB" || n <= 0 || e <= 0)
    throw DataError("line 1: bad embedding header '" + header + "'");
  EmbeddingMatrix emb;
  emb.n = static_cast<std::size_t>(n);
  emb.dim = static_cast<std::size_t>(e);
  emb.metric = metric;
  emb.data.reserve(emb.n * emb.dim);
  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    lineno++;
    if (line.empty()) continue;
    auto fields = split_csv(line);
    if (fields.size() != emb.dim)
      throw DataError("line " + std::to_string(lineno) + ": expected " +
                      std::to_string(emb.dim) + " values");
    for (const auto& f : fields) emb.data.push_back(parse_num(f, lineno));
  }
  if (emb.data.size() != emb.n * emb.dim)
    throw DataError("embedding file row count does not match header");
  return emb;
}

void save_embeddings(const std::string& path, const EmbeddingMatrix& emb) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write embedding file " + path);
  out << "EMB " << emb.n << ' ' << emb.dim << '\n';
  out.precision(17);
  for (std::size_t i = 0; i < emb.n; ++i) {
    const double* row = emb.row(i);
    for (std::size_t d = 0; d < emb.dim; ++d) out << (d ? "," : "") << row[d];
    out << '\n';
  }
}

LabeledDataset generate_longtail(int num_classes, double imbalance_ratio,
                                 std::size_t n_total, int embed_dim,
                                 double cluster_separation, std::uint64_t seed) {
  if (num_classes < 2) throw ConfigError("generator needs num_classes >= 2");
  if (imbalance_ratio < 1.0) throw ConfigError("imbalance_ratio must be >= 1");
  if (embed_dim < 1) throw ConfigError("embed_dim must be >= 1");
  Rng rng(seed);

  // geometric profile n_max, n_max*r, ..., n_max/IR
  double r = std::pow(imbalance_ratio, -1.0 / static_cast<double>(num_classes - 1));
  double geom_sum = 0.0;
  for (int c = 0; c < num_classes; ++c) geom_sum += std::pow(r, c);
  double n_max = static_cast<double>(n_total) / geom_sum;
  std::vector<std::int64_t> sizes(static_cast<std::size_t>(num_classes));
  for (int c = 0; c < num_classes; ++c)
    sizes[static_cast<std::size_t>(c)] =
        std::max<std::int64_t>(2, std::llround(n_max * std::pow(r, c)));

  double achieved = static_cast<double>(sizes.front()) / static_cast<double>(sizes.back());
  if (std::abs(achieved - imbalance_ratio) > 0.1 * imbalance_ratio)
    throw ConfigError("infeasible sizes: requested IR " + std::to_string(imbalance_ratio) +
                      " but rounding yields " + std::to_string(achieved));

  // cluster means: random unit directions scaled by the separation
  std::vector<std::vector<double>> means(static_cast<std::size_t>(num_classes));
  for (auto& m : means) {
    m.resize(static_cast<std::size_t>(embed_dim));
    double norm = 0.0;
    for (auto& v : m) {
      v = rng.next_gaussian();
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (auto& v : m) v = v / norm * cluster_separation;
  }

  LabeledDataset ds;
  ds.sequence = false;
  ds.feature_dim = embed_dim;
  ds.num_classes = num_classes;
  for (int c = 0; c < num_classes; ++c) {
    std::int64_t n = sizes[static_cast<std::size_t>(c)];
    std::int64_t n_tr = std::max<std::int64_t>(1, std::llround(0.7 * static_cast<double>(n)));
    std::int64_t n_va = std::max<std::int64_t>(1, std::llround(0.1 * static_cast<double>(n)));
    if (n_tr + n_va > n) n_tr = n - n_va;
    for (std::int64_t i = 0; i < n; ++i) {
      Example e;
      e.id = static_cast<int>(ds.examples.size());
      std::vector<double> row(static_cast<std::size_t>(embed_dim));
      for (int d = 0; d < embed_dim; ++d)
        row[static_cast<std::size_t>(d)] =
            means[static_cast<std::size_t>(c)][static_cast<std::size_t>(d)] +
            rng.next_gaussian();
      e.rows.push_back(std::move(row));
      e.labels.push_back(c);
      ds.examples.push_back(std::move(e));
      ds.splits.push_back(i < n_tr ? Split::Train
                                   : (i < n_tr + n_va ? Split::Valid : Split::Test));
    }
  }
  ds.validate();
  return ds;
}

}  // namespace hamr
