#include "hamr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <tuple>

namespace hamr {

namespace {

ClassPRF prf_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
  ClassPRF out;
  out.support = tp + fn;
  out.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  out.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  out.f1 = (out.precision + out.recall) > 0.0
               ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
               : 0.0;
  return out;
}

}  // namespace

F1Report f1_scores(const std::vector<int>& predictions, const std::vector<int>& gold,
                   int num_classes, bool exclude_empty) {
  if (predictions.size() != gold.size())
    throw ShapeError("f1_scores: prediction/gold length mismatch");
  const std::size_t C = static_cast<std::size_t>(num_classes);
  std::vector<std::int64_t> tp(C, 0), fp(C, 0), fn(C, 0);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    int g = gold[i], p = predictions[i];
    if (g < 0 || g >= num_classes || p < 0 || p >= num_classes)
      throw DataError("f1_scores: label out of range at position " + std::to_string(i));
    if (g == p) {
      tp[static_cast<std::size_t>(g)]++;
    } else {
      fn[static_cast<std::size_t>(g)]++;
      fp[static_cast<std::size_t>(p)]++;
    }
  }
  F1Report report;
  report.per_class.resize(C);
  std::int64_t tp_all = 0, fp_all = 0, fn_all = 0;
  double macro_sum = 0.0;
  int macro_n = 0;
  for (std::size_t c = 0; c < C; ++c) {
    report.per_class[c] = prf_from_counts(tp[c], fp[c], fn[c]);
    tp_all += tp[c];
    fp_all += fp[c];
    fn_all += fn[c];
    bool empty = tp[c] + fp[c] + fn[c] == 0;
    if (!(exclude_empty && empty)) {
      macro_sum += report.per_class[c].f1;
      macro_n++;
    }
  }
  report.macro_f1 = macro_n > 0 ? macro_sum / macro_n : 0.0;
  report.micro_f1 = prf_from_counts(tp_all, fp_all, fn_all).f1;
  return report;
}

namespace {

struct Span {
  std::string type;
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
  bool operator<(const Span& o) const {
    return std::tie(type, begin, end) < std::tie(o.type, o.begin, o.end);
  }
  bool operator==(const Span& o) const {
    return type == o.type && begin == o.begin && end == o.end;
  }
};

std::vector<Span> decode_spans(const std::vector<std::string>& tags) {
  std::vector<Span> spans;
  std::string cur_type;
  std::size_t cur_begin = 0;
  bool in_span = false;
  auto close = [&](std::size_t end) {
    if (in_span) spans.push_back({cur_type, cur_begin, end});
    in_span = false;
  };
  for (std::size_t t = 0; t < tags.size(); ++t) {
    const std::string& tag = tags[t];
    if (tag == "O") {
      close(t);
    } else if (tag.size() > 2 && tag[1] == '-' && (tag[0] == 'B' || tag[0] == 'I')) {
      std::string type = tag.substr(2);
      if (tag[0] == 'B' || !in_span || type != cur_type) {
        // lenient: a dangling I-X starts a new span
        close(t);
        cur_type = type;
        cur_begin = t;
        in_span = true;
      }
    } else {
      throw DataError("malformed BIO tag '" + tag + "'");
    }
  }
  close(tags.size());
  return spans;
}

}  // namespace

F1Report bio_span_f1(const std::vector<std::vector<std::string>>& pred_tags,
                     const std::vector<std::vector<std::string>>& gold_tags) {
  if (pred_tags.size() != gold_tags.size())
    throw ShapeError("bio_span_f1: sequence count mismatch");
  std::set<std::string> types;
  std::map<std::string, std::int64_t> tp, fp, fn;
  for (std::size_t s = 0; s < pred_tags.size(); ++s) {
    if (pred_tags[s].size() != gold_tags[s].size())
      throw ShapeError("bio_span_f1: sequence length mismatch at " + std::to_string(s));
    auto pred = decode_spans(pred_tags[s]);
    auto gold = decode_spans(gold_tags[s]);
    std::multiset<Span> gold_set(gold.begin(), gold.end());
    for (const auto& sp : pred) {
      types.insert(sp.type);
      auto it = gold_set.find(sp);
      if (it != gold_set.end()) {
        tp[sp.type]++;
        gold_set.erase(it);
      } else {
        fp[sp.type]++;
      }
    }
    for (const auto& sp : gold_set) {
      types.insert(sp.type);
      fn[sp.type]++;
    }
  }
  F1Report report;
  std::int64_t tp_all = 0, fp_all = 0, fn_all = 0;
  double macro_sum = 0.0;
  for (const auto& type : types) {
    ClassPRF prf = prf_from_counts(tp[type], fp[type], fn[type]);
    report.per_class.push_back(prf);
    report.class_names.push_back(type);
    macro_sum += prf.f1;
    tp_all += tp[type];
    fp_all += fp[type];
    fn_all += fn[type];
  }
  report.macro_f1 = types.empty() ? 0.0 : macro_sum / static_cast<double>(types.size());
  report.micro_f1 = prf_from_counts(tp_all, fp_all, fn_all).f1;
  return report;
}

double imbalance_ratio(const std::vector<std::int64_t>& class_counts) {
  if (class_counts.empty()) throw DataError("imbalance_ratio: no classes");
  std::int64_t mx = class_counts[0], mn = class_counts[0];
  for (std::int64_t c : class_counts) {
    if (c < 1) throw DataError("imbalance_ratio: class count must be >= 1");
    mx = std::max(mx, c);
    mn = std::min(mn, c);
  }
  return static_cast<double>(mx) / static_cast<double>(mn);
}

QuartileReport quartile_analysis(const std::vector<double>& per_label_f1,
                                 const std::vector<std::int64_t>& train_label_counts) {
  if (per_label_f1.size() != train_label_counts.size())
    throw ShapeError("quartile_analysis: f1/count length mismatch");
  const std::size_t L = per_label_f1.size();
  std::vector<int> order(L);
  for (std::size_t i = 0; i < L; ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    auto ca = train_label_counts[static_cast<std::size_t>(a)];
    auto cb = train_label_counts[static_cast<std::size_t>(b)];
    if (ca != cb) return ca < cb;
    return a < b;
  });
  QuartileReport report;
  report.quartile_of_label.assign(L, -1);
  report.labels.assign(4, {});
  report.mean_f1.assign(4, std::numeric_limits<double>::quiet_NaN());
  // contiguous split, remainders to the earlier quartiles
  std::size_t base = L / 4, rem = L % 4, pos = 0;
  for (int q = 0; q < 4; ++q) {
    std::size_t size = base + (static_cast<std::size_t>(q) < rem ? 1 : 0);
    double sum = 0.0;
    for (std::size_t j = 0; j < size; ++j) {
      int label = order[pos++];
      report.quartile_of_label[static_cast<std::size_t>(label)] = q;
      report.labels[static_cast<std::size_t>(q)].push_back(label);
      sum += per_label_f1[static_cast<std::size_t>(label)];
    }
    if (size > 0) report.mean_f1[static_cast<std::size_t>(q)] = sum / static_cast<double>(size);
  }
  return report;
}

double local_consistency(const NeighborIndex& index, const std::vector<int>& labels,
                         const std::vector<int>& sample_set, int K) {
  if (sample_set.empty()) throw ConfigError("local_consistency: empty sample set");
  if (K < 1 || static_cast<std::size_t>(K) > index.size() - 1)
    throw ConfigError("local_consistency: K out of range");
  NeighborLists lists = index.query(sample_set, K);
  double consistent = 0.0;
  for (std::size_t i = 0; i < sample_set.size(); ++i) {
    int anchor_label = labels[static_cast<std::size_t>(sample_set[i])];
    int same = 0;
    for (int j : lists.lists[i])
      if (labels[static_cast<std::size_t>(j)] == anchor_label) same++;
    if (static_cast<double>(same) / static_cast<double>(K) > 0.5) consistent += 1.0;
  }
  return consistent / static_cast<double>(sample_set.size());
}

double random_consistency(const std::vector<int>& labels,
                          const std::vector<int>& sample_set, int K, Rng& rng) {
  if (sample_set.empty()) throw ConfigError("random_consistency: empty sample set");
  const std::size_t n = labels.size();
  double consistent = 0.0;
  for (int anchor : sample_set) {
    int anchor_label = labels[static_cast<std::size_t>(anchor)];
    int same = 0;
    for (int k = 0; k < K; ++k) {
      std::size_t j;
      do {
        j = static_cast<std::size_t>(rng.next_below(n));
      } while (static_cast<int>(j) == anchor);
      if (labels[j] == anchor_label) same++;
    }
    if (static_cast<double>(same) / static_cast<double>(K) > 0.5) consistent += 1.0;
  }
  return consistent / static_cast<double>(sample_set.size());
}

}  // namespace hamr
