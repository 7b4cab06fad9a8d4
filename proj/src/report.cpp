#include "nncov/report.hpp"

#include "binary_io.hpp"
#include "nncov/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace nncov {

namespace {

using nlohmann::json;

constexpr std::size_t max_pair_rows = 500;

json stats_json(const ObligationStats& s) {
    return {{"min", s.min}, {"max", s.max}, {"avg", s.avg}, {"std", s.std}, {"var", s.var}};
}

std::string escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

const CriterionReport* heatmap_source(const ReportBundle& bundle) {
    for (const auto& c : bundle.criteria) {
        if (bundle.heatmap ? c.result.id == *bundle.heatmap : !is_mcdc(c.result.id.family)) {
            return &c;
        }
    }
    return nullptr;
}

} // namespace

std::vector<std::size_t> ModelInfo::unit_counts() const {
    std::vector<std::size_t> counts;
    for (const auto& l : coverage_layers) {
        counts.push_back(l.units);
    }
    return counts;
}

ModelInfo describe(const Model& model, Granularity granularity) {
    ModelInfo info{model.name(), model.task(), model.input_shape(), granularity, {}};
    for (const auto& l : model.coverage_layers()) {
        info.coverage_layers.push_back(
            {l.layer_index, to_string(model.layers()[l.layer_index].kind()), l.shape, unit_count(l.shape, granularity)});
    }
    return info;
}

std::vector<CriterionReport> with_stats(const std::vector<CoverageResult>& results) {
    std::vector<CriterionReport> out;
    for (const auto& r : results) {
        out.push_back({r, summarize(r)});
    }
    return out;
}

nlohmann::json to_json(const ReportBundle& bundle) {
    json layers = json::array();
    for (const auto& l : bundle.model.coverage_layers) {
        layers.push_back({{"layer_index", l.layer_index}, {"kind", l.kind}, {"shape", l.shape}, {"units", l.units}});
    }
    json criteria = json::array();
    for (const auto& c : bundle.criteria) {
        criteria.push_back({
            {"criterion", c.result.id.label()},
            {"family", to_string(c.result.id.family)},
            {"parameter", c.result.id.parameter},
            {"total", c.result.total},
            {"covered", c.result.covered},
            {"percent", c.result.percent},
            {"observations", c.result.observations},
            {"stats", stats_json(c.stats)},
        });
    }
    json growth = json::array();
    for (const auto& g : bundle.growth) {
        json points = json::array();
        for (const auto& p : g.points) {
            points.push_back({{"tests_seen", p.tests_seen}, {"percent", p.percent}});
        }
        growth.push_back({{"criterion", g.id.label()}, {"points", std::move(points)}});
    }
    json doc = {
        {"schema_version", report_schema_version},
        {"model",
         {{"name", bundle.model.name},
          {"task", to_string(bundle.model.task)},
          {"input_shape", bundle.model.input_shape},
          {"granularity", to_string(bundle.model.granularity)},
          {"coverage_layers", std::move(layers)}}},
        {"config", bundle.config},
        {"criteria", std::move(criteria)},
        {"growth", std::move(growth)},
        {"warnings", bundle.warnings},
    };
    if (bundle.comparison) {
        doc["comparison"] = comparison_json(*bundle.comparison);
    }
    if (bundle.accuracy) {
        doc["accuracy"] = {{"correct", bundle.accuracy->correct},
                           {"total", bundle.accuracy->total},
                           {"percent", bundle.accuracy->percent}};
    }
    return doc;
}

std::string render_json(const ReportBundle& bundle) {
    return to_json(bundle).dump(2) + "\n";
}

std::string render_coverage_csv(const ReportBundle& bundle) {
    std::string out = "criterion,total,covered,percent,min,max,avg,std,var\n";
    for (const auto& c : bundle.criteria) {
        const auto& r = c.result;
        out += r.id.label() + "," + std::to_string(r.total) + "," + std::to_string(r.covered) + "," +
               format_number(r.percent) + "," + format_number(c.stats.min) + "," + format_number(c.stats.max) + "," +
               format_number(c.stats.avg) + "," + format_number(c.stats.std) + "," + format_number(c.stats.var) + "\n";
    }
    return out;
}

std::string render_hitcounts_csv(const ReportBundle& bundle) {
    const auto units = bundle.model.unit_counts();
    std::string out = "criterion,layer,unit,section,hit_count\n";
    for (const auto& c : bundle.criteria) {
        const auto& r = c.result;
        if (is_mcdc(r.id.family)) {
            continue;
        }
        const auto label = r.id.label();
        for (std::size_t i = 0; i < r.hit_counts.size(); ++i) {
            const auto o = obligation_at(r.id, units, i);
            std::string section;
            if (o.section) {
                section = std::to_string(*o.section);
            } else if (o.kind == ObligationKind::nbc_lower) {
                section = "lower";
            } else if (o.kind == ObligationKind::nbc_upper) {
                section = "upper";
            }
            out += label + "," + std::to_string(o.unit.layer_ordinal) + "," + std::to_string(o.unit.unit_index) + "," +
                   section + "," + std::to_string(r.hit_counts[i]) + "\n";
        }
    }
    return out;
}

std::string render_mcdc_pairs_csv(const ReportBundle& bundle) {
    const PairLayout layout(bundle.model.unit_counts());
    std::string out = "criterion,condition_layer,condition_unit,decision_layer,decision_unit,hit_count\n";
    for (const auto& c : bundle.criteria) {
        const auto& r = c.result;
        if (!is_mcdc(r.id.family)) {
            continue;
        }
        const auto label = r.id.label();
        for (std::size_t i = 0; i < r.hit_counts.size(); ++i) {
            const auto o = layout.at(i);
            out += label + "," + std::to_string(o.condition.layer_ordinal) + "," +
                   std::to_string(o.condition.unit_index) + "," + std::to_string(o.decision.layer_ordinal) + "," +
                   std::to_string(o.decision.unit_index) + "," + std::to_string(r.hit_counts[i]) + "\n";
        }
    }
    return out;
}

std::string render_growth_csv(const ReportBundle& bundle) {
    std::string out = "criterion,tests_seen,percent\n";
    for (const auto& g : bundle.growth) {
        const auto label = g.id.label();
        for (const auto& p : g.points) {
            out += label + "," + std::to_string(p.tests_seen) + "," + format_number(p.percent) + "\n";
        }
    }
    return out;
}

std::string render_comparison_csv(const ComparisonRun& run) {
    std::string out = "dataset,criterion,coverage,delta,ncoverage\n";
    for (const auto& r : run.rows) {
        out += r.dataset + "," + r.criterion.label() + "," + format_number(r.coverage) + "," + format_number(r.delta) +
               "," + format_number(r.ncoverage) + "\n";
    }
    return out;
}

nlohmann::json comparison_json(const ComparisonRun& run) {
    json rows = json::array();
    for (const auto& r : run.rows) {
        rows.push_back({{"dataset", r.dataset},
                        {"criterion", r.criterion.label()},
                        {"coverage", r.coverage},
                        {"delta", r.delta},
                        {"ncoverage", r.ncoverage}});
    }
    return {{"baseline", run.baseline}, {"rows", std::move(rows)}, {"warnings", run.warnings}};
}

std::string render_timings_json(const ReportBundle& bundle) {
    json t = json::array();
    for (const auto& x : bundle.timings) {
        t.push_back({{"label", x.label}, {"milliseconds", x.milliseconds}});
    }
    return json{{"timings", std::move(t)}}.dump(2) + "\n";
}

std::string color_for(std::uint64_t count, std::uint64_t max) {
    long level = 255;
    if (max > 0) {
        const double c = static_cast<double>(std::min(count, max)) / static_cast<double>(max);
        level = std::lround(255.0 * (1.0 - c));
    }
    char buf[8];
    std::snprintf(buf, sizeof buf, "#FF%02lX%02lX", level, level);
    return buf;
}

std::vector<std::vector<std::uint64_t>> unit_hits(const CoverageResult& result,
                                                  const std::vector<std::size_t>& unit_counts) {
    std::size_t units = 0;
    for (auto n : unit_counts) {
        units += n;
    }
    if (units == 0 || result.hit_counts.size() % units != 0) {
        fail(ErrorKind::input, result.id.label() + " hit counts do not match the unit layout");
    }
    const auto slots = result.hit_counts.size() / units;
    std::vector<std::vector<std::uint64_t>> out;
    std::size_t flat = 0;
    for (auto n : unit_counts) {
        std::vector<std::uint64_t> layer(n, 0);
        for (std::size_t u = 0; u < n; ++u, ++flat) {
            for (std::size_t s = 0; s < slots; ++s) {
                layer[u] += result.hit_counts[flat * slots + s];
            }
        }
        out.push_back(std::move(layer));
    }
    return out;
}

std::string render_html(const ReportBundle& bundle) {
    std::ostringstream h;
    h << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>Coverage report: "
      << escape(bundle.model.name) << "</title>\n<style>\n"
      << "body{font-family:sans-serif;margin:1.5em}\n"
      << "table{border-collapse:collapse;margin-bottom:1em}\n"
      << "td,th{border:1px solid #bbb;padding:2px 6px;text-align:right}\n"
      << ".grid{display:flex;flex-wrap:wrap;gap:2px;max-width:60em}\n"
      << ".unit,.degree{width:1.6em;height:1.6em;border:1px solid #888;font-size:9px;display:flex;"
         "align-items:center;justify-content:center}\n"
      << ".never{outline:2px dashed #0050c8;outline-offset:-3px}\n"
      << "</style>\n</head>\n<body>\n";
    h << "<h1>Coverage report: " << escape(bundle.model.name) << "</h1>\n";
    h << "<p>Granularity: " << to_string(bundle.model.granularity) << "</p>\n";
    if (bundle.accuracy) {
        h << "<p>Accuracy: " << bundle.accuracy->correct << " / " << bundle.accuracy->total << " ("
          << format_number(bundle.accuracy->percent) << "%)</p>\n";
    }
    for (const auto& w : bundle.warnings) {
        h << "<p class=\"warning\">Warning: " << escape(w) << "</p>\n";
    }

    h << "<h2>Summary</h2>\n<table>\n<tr><th>criterion</th><th>covered</th><th>total</th><th>percent</th>"
         "<th>min</th><th>max</th><th>avg</th><th>std</th><th>var</th></tr>\n";
    for (const auto& c : bundle.criteria) {
        h << "<tr><td>" << escape(c.result.id.label()) << "</td><td>" << c.result.covered << "</td><td>"
          << c.result.total << "</td><td>" << format_number(c.result.percent) << "</td><td>"
          << format_number(c.stats.min) << "</td><td>" << format_number(c.stats.max) << "</td><td>"
          << format_number(c.stats.avg) << "</td><td>" << format_number(c.stats.std) << "</td><td>"
          << format_number(c.stats.var) << "</td></tr>\n";
    }
    h << "</table>\n";

    const auto units = bundle.model.unit_counts();
    if (const auto* src = heatmap_source(bundle)) {
        const auto hits = unit_hits(src->result, units);
        std::uint64_t max = 0;
        for (const auto& layer : hits) {
            for (auto v : layer) {
                max = std::max(max, v);
            }
        }
        h << "<h2>Unit heatmap: " << escape(src->result.id.label()) << "</h2>\n";
        h << "<p>White: never hit. Red: " << max
          << " hits (the maximum). Dashed outline: never covered.</p>\n";
        for (std::size_t l = 0; l < hits.size(); ++l) {
            const auto& info = bundle.model.coverage_layers[l];
            h << "<section id=\"layer-" << l << "\">\n<h3>Layer " << l << " (" << escape(info.kind) << " #"
              << info.layer_index << ", " << to_string(info.shape) << ", " << info.units << " units)</h3>\n";
            h << "<div class=\"grid\">\n";
            for (std::size_t u = 0; u < hits[l].size(); ++u) {
                const auto v = hits[l][u];
                h << "<div class=\"unit" << (v == 0 ? " never" : "") << "\" style=\"background:" << color_for(v, max)
                  << "\" title=\"layer " << l << " unit " << u << ": " << v << "\">" << u << "</div>\n";
            }
            h << "</div>\n</section>\n";
        }
    }

    const PairLayout layout(units);
    bool any_mcdc = false;
    for (const auto& c : bundle.criteria) {
        any_mcdc = any_mcdc || is_mcdc(c.result.id.family);
    }
    if (any_mcdc && layout.adjacent_pairs() > 0) {
        h << "<h2>MC/DC pairs</h2>\n";
        for (std::size_t p = 0; p < layout.adjacent_pairs(); ++p) {
            h << "<section id=\"pairs-" << p << "\">\n<h3>Layer " << p << " to layer " << p + 1 << "</h3>\n";
            for (const auto& c : bundle.criteria) {
                if (!is_mcdc(c.result.id.family)) {
                    continue;
                }
                const auto& r = c.result;
                const auto begin = layout.offset(p);
                const auto end = layout.offset(p + 1);
                std::vector<std::uint64_t> degree(units[p] + units[p + 1], 0);
                std::vector<std::size_t> covered;
                for (auto i = begin; i < end; ++i) {
                    if (r.hit_counts[i] > 0) {
                        const auto o = layout.at(i);
                        ++degree[o.condition.unit_index];
                        ++degree[units[p] + o.decision.unit_index];
                        covered.push_back(i);
                    }
                }
                const auto max_degree = *std::max_element(degree.begin(), degree.end());
                h << "<h4>" << escape(r.id.label()) << ": " << covered.size() << " of " << end - begin
                  << " pairs covered</h4>\n<div class=\"grid\">\n";
                for (std::size_t u = 0; u < degree.size(); ++u) {
                    const bool cond = u < units[p];
                    h << "<div class=\"degree\" style=\"background:" << color_for(degree[u], max_degree) << "\" title=\""
                      << (cond ? "condition " : "decision ") << (cond ? u : u - units[p]) << ": " << degree[u]
                      << " covered pairs\">" << (cond ? "c" : "d") << (cond ? u : u - units[p]) << "</div>\n";
                }
                h << "</div>\n";
                if (!covered.empty()) {
                    h << "<table>\n<tr><th>condition</th><th>decision</th><th>hits</th></tr>\n";
                    for (std::size_t k = 0; k < covered.size() && k < max_pair_rows; ++k) {
                        const auto o = layout.at(covered[k]);
                        h << "<tr><td>" << o.condition.unit_index << "</td><td>" << o.decision.unit_index << "</td><td>"
                          << r.hit_counts[covered[k]] << "</td></tr>\n";
                    }
                    h << "</table>\n";
                    if (covered.size() > max_pair_rows) {
                        h << "<p>" << covered.size() - max_pair_rows
                          << " more covered pairs are listed in mcdc_pairs.csv.</p>\n";
                    }
                }
            }
            h << "</section>\n";
        }
    }

    if (bundle.comparison) {
        h << "<h2>Dataset comparison (baseline " << escape(bundle.comparison->baseline) << ")</h2>\n";
        h << "<table>\n<tr><th>dataset</th><th>criterion</th><th>coverage</th><th>delta</th><th>ncoverage</th></tr>\n";
        for (const auto& r : bundle.comparison->rows) {
            h << "<tr><td>" << escape(r.dataset) << "</td><td>" << escape(r.criterion.label()) << "</td><td>"
              << format_number(r.coverage) << "</td><td>" << format_number(r.delta) << "</td><td>"
              << format_number(r.ncoverage) << "</td></tr>\n";
        }
        h << "</table>\n";
    }
    h << "</body>\n</html>\n";
    return h.str();
}

void emit_reports(const ReportBundle& bundle, const std::filesystem::path& outdir) {
    detail::ensure_directory(outdir);
    detail::write_text(outdir / "report.json", render_json(bundle));
    detail::write_text(outdir / "coverage.csv", render_coverage_csv(bundle));
    detail::write_text(outdir / "hitcounts.csv", render_hitcounts_csv(bundle));
    detail::write_text(outdir / "growth.csv", render_growth_csv(bundle));
    detail::write_text(outdir / "report.html", render_html(bundle));
    detail::write_text(outdir / "timings.json", render_timings_json(bundle));
    if (std::any_of(bundle.criteria.begin(), bundle.criteria.end(),
                    [](const auto& c) { return is_mcdc(c.result.id.family); })) {
        detail::write_text(outdir / "mcdc_pairs.csv", render_mcdc_pairs_csv(bundle));
    }
    if (bundle.comparison) {
        detail::write_text(outdir / "comparison.csv", render_comparison_csv(*bundle.comparison));
        detail::write_text(outdir / "comparison.json", comparison_json(*bundle.comparison).dump(2) + "\n");
    }
}

} // namespace nncov
