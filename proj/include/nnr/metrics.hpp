#pragma once

// Impression-level ranking metrics, their aggregation over impressions and
// seeds, parameter accounting, and report tables.

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "nnr/layers.hpp"

namespace nnr {

/// Pairwise AUC with ties credited 1/2, computed from average ranks.
/// Throws DegenerateInputError unless both classes are present.
double auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Candidate indices by descending score; ties keep input order.
std::vector<std::size_t> rank_order(std::span<const double> scores);

/// Mean over positives of 1 / rank. Throws DegenerateInputError without positives.
double mrr(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// DCG@k over the ranked list divided by the ideal DCG@k.
double ndcg_at_k(std::span<const double> scores, std::span<const std::uint8_t> labels, int k);

struct ImpressionMetrics {
  std::string impression_id;
  std::optional<double> auc;  // absent for single-class impressions
  std::optional<double> mrr;  // absent without positives
  std::optional<double> ndcg5;
  std::optional<double> ndcg10;
};

ImpressionMetrics impression_metrics(const std::string& impression_id, std::span<const double> scores,
                                     std::span<const std::uint8_t> labels);

struct RunMetrics {
  std::vector<ImpressionMetrics> per_impression;
  double auc = 0.0;
  double mrr = 0.0;
  double ndcg5 = 0.0;
  double ndcg10 = 0.0;
  std::size_t auc_excluded = 0;   // impressions without both classes
  std::size_t rank_excluded = 0;  // impressions without positives
};

/// Unweighted means over impressions, skipping (and counting) undefined values.
RunMetrics aggregate_impressions(std::vector<ImpressionMetrics> per_impression);

struct MetricSummary {
  double mean = 0.0;
  std::optional<double> std;  // sample standard deviation, only with >= 2 seeds
  std::vector<double> per_seed;
};

struct MetricReport {
  std::string model;
  std::string fusion;
  std::string objective;
  double tau = 0.0;
  std::vector<std::uint64_t> seeds;
  std::string split = "test";
  MetricSummary auc, mrr, ndcg5, ndcg10;
};

MetricSummary summarize(const std::vector<double>& values);
MetricReport aggregate_seeds(const std::vector<RunMetrics>& runs, MetricReport metadata);

/// Tab-separated: one row per report, mean and std columns per metric. An
/// absent std is written as "-".
void write_report_table(std::ostream& out, const std::vector<MetricReport>& reports);
std::string format_summary(const MetricReport& report);

struct ParameterBreakdown {
  Index news_encoder = 0;
  Index user_encoder = 0;
  Index other = 0;
  Index total = 0;
};

/// Sums parameter sizes by name prefix: "ne." news encoder, "ue." user
/// encoder, "emb." other. Any other name is an AccountingError.
template <typename S>
ParameterBreakdown count_parameters(const ParameterStore<S>& store) {
  ParameterBreakdown b;
  for (const auto& p : store.all()) {
    const Index n = p.tensor.size();
    if (p.name.rfind("ne.", 0) == 0) b.news_encoder += n;
    else if (p.name.rfind("ue.", 0) == 0) b.user_encoder += n;
    else if (p.name.rfind("emb.", 0) == 0) b.other += n;
    else throw AccountingError("parameter '" + p.name + "' has no recognized component prefix");
    b.total += n;
  }
  return b;
}

}  // namespace nnr
