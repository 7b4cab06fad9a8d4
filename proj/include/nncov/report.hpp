#pragma once

#include "nncov/analysis.hpp"
#include "nncov/stats.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace nncov {

inline constexpr int report_schema_version = 1;

struct LayerInfo {
    std::size_t layer_index = 0;
    std::string kind;
    Shape shape;
    std::size_t units = 0;
};

struct ModelInfo {
    std::string name;
    TaskKind task = TaskKind::classification;
    Shape input_shape;
    Granularity granularity = Granularity::neuron;
    std::vector<LayerInfo> coverage_layers;

    std::vector<std::size_t> unit_counts() const;
};

ModelInfo describe(const Model& model, Granularity granularity);

struct CriterionReport {
    CoverageResult result;
    ObligationStats stats;
};

struct Accuracy {
    std::size_t correct = 0;
    std::size_t total = 0;
    double percent = 0.0;
};

/// Everything one run reports.
struct ReportBundle {
    ModelInfo model;
    nlohmann::json config = nlohmann::json::object();
    std::vector<CriterionReport> criteria;
    std::vector<GrowthCurve> growth;
    std::optional<ComparisonRun> comparison;
    std::optional<Accuracy> accuracy;
    std::vector<std::string> warnings;
    std::vector<Timing> timings;
    /// Criterion whose per-unit hit counts drive the HTML heatmap; the first unit-level
    /// criterion when unset.
    std::optional<CriterionId> heatmap;
};

/// Builds a bundle entry per result, with its statistics.
std::vector<CriterionReport> with_stats(const std::vector<CoverageResult>& results);

/// The `report.json` document. Timings are kept out so repeated runs serialize identically.
nlohmann::json to_json(const ReportBundle& bundle);
std::string render_json(const ReportBundle& bundle);

std::string render_coverage_csv(const ReportBundle& bundle);
/// `criterion,layer,unit,section,hit_count` for unit-level criteria. The section column
/// holds the KMNC section, `lower`/`upper` for NBC, and is empty otherwise.
std::string render_hitcounts_csv(const ReportBundle& bundle);
/// `criterion,condition_layer,condition_unit,decision_layer,decision_unit,hit_count`.
std::string render_mcdc_pairs_csv(const ReportBundle& bundle);
std::string render_growth_csv(const ReportBundle& bundle);
std::string render_comparison_csv(const ComparisonRun& run);
nlohmann::json comparison_json(const ComparisonRun& run);
std::string render_timings_json(const ReportBundle& bundle);

/// "#RRGGBB" on a white-to-red scale: 0 is white, `max` is pure red.
std::string color_for(std::uint64_t count, std::uint64_t max);

/// Per-unit hit totals of a unit-level criterion (slots summed), one vector per layer.
std::vector<std::vector<std::uint64_t>> unit_hits(const CoverageResult& result,
                                                  const std::vector<std::size_t>& unit_counts);

std::string render_html(const ReportBundle& bundle);

/// Writes report.json, coverage.csv, hitcounts.csv, growth.csv, report.html and
/// timings.json, plus mcdc_pairs.csv and comparison.csv/json when present. Throws an
/// I/O error when the directory cannot be written.
void emit_reports(const ReportBundle& bundle, const std::filesystem::path& outdir);

} // namespace nncov
