#include "nncov/analysis.hpp"

#include "nncov/error.hpp"
#include "nncov/parallel.hpp"
#include "random.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace nncov {

namespace {

// First `k` entries of a seeded Fisher-Yates shuffle of 0..n-1.
std::vector<std::size_t> draw_distinct(std::size_t n, std::size_t k, std::mt19937_64& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
        const auto j = i + detail::uniform_below(rng, n - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

DatasetCoverage coverage_of(const std::string& name, const std::vector<CoverageResult>& results) {
    DatasetCoverage c{name, {}};
    for (const auto& r : results) {
        c.percents.emplace_back(r.id, r.percent);
    }
    return c;
}

} // namespace

ComparisonRun normalized_difference(const DatasetCoverage& baseline, std::span<const DatasetCoverage> others) {
    if (others.empty()) {
        fail(ErrorKind::configuration, "comparison needs at least one dataset besides the baseline");
    }
    std::set<std::string> names{baseline.name};
    std::vector<const DatasetCoverage*> sorted;
    for (const auto& d : others) {
        if (!names.insert(d.name).second) {
            fail(ErrorKind::configuration, "dataset name '" + d.name + "' appears more than once in the comparison");
        }
        if (d.percents.size() != baseline.percents.size()) {
            fail(ErrorKind::configuration, "dataset '" + d.name + "' was measured with different criteria");
        }
        for (std::size_t c = 0; c < d.percents.size(); ++c) {
            if (d.percents[c].first != baseline.percents[c].first) {
                fail(ErrorKind::configuration, "dataset '" + d.name + "' was measured with different criteria");
            }
        }
        sorted.push_back(&d);
    }
    std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) { return a->name < b->name; });

    ComparisonRun run;
    run.baseline = baseline.name;
    std::vector<ComparisonRow> rows;
    for (std::size_t c = 0; c < baseline.percents.size(); ++c) {
        const auto [id, base] = baseline.percents[c];
        double hi = 0.0;
        double lo = 0.0;
        for (const auto* d : sorted) {
            const double delta = d->percents[c].second - base;
            hi = std::max(hi, delta);
            lo = std::min(lo, delta);
        }
        const double range = hi - lo;
        if (range == 0.0) {
            run.warnings.push_back("all datasets have the same " + id.label() +
                                   " coverage as the baseline; normalized values set to 0");
        }
        auto row = [&](const std::string& name, double percent) {
            const double delta = percent - base;
            return ComparisonRow{name, id, percent, delta, range == 0.0 ? 0.0 : delta / range};
        };
        rows.push_back(row(baseline.name, base));
        for (const auto* d : sorted) {
            rows.push_back(row(d->name, d->percents[c].second));
        }
    }
    // Dataset-major order: baseline, then the others by name.
    const auto per_criterion = sorted.size() + 1;
    for (std::size_t d = 0; d < per_criterion; ++d) {
        for (std::size_t c = 0; c < baseline.percents.size(); ++c) {
            run.rows.push_back(rows[c * per_criterion + d]);
        }
    }
    return run;
}

ComparisonRun compare(const Model& model, const Profile* profile, const Dataset& baseline,
                      std::span<const Dataset> others, const MeasureOptions& options) {
    if (others.empty()) {
        fail(ErrorKind::configuration, "comparison needs at least one dataset besides the baseline");
    }
    std::vector<const Dataset*> all{&baseline};
    for (const auto& d : others) {
        all.push_back(&d);
    }
    for (const auto* d : all) {
        d->validate();
        if (d->empty()) {
            fail(ErrorKind::input, "dataset '" + d->name + "' is empty");
        }
        if (d->inputs.front().shape() != model.input_shape()) {
            fail(ErrorKind::input, "dataset '" + d->name + "' has input shape " + to_string(d->inputs.front().shape()) +
                                       " but the model expects " + to_string(model.input_shape()));
        }
    }
    auto inner = options;
    inner.jobs = 1;
    if (inner.mcdc) {
        inner.mcdc->jobs = 1;
    }
    std::vector<DatasetCoverage> coverages(all.size());
    parallel_chunks(all.size(), options.jobs, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (auto i = begin; i < end; ++i) {
            coverages[i] = coverage_of(all[i]->name, measure(model, all[i]->inputs, profile, inner).results);
        }
    });
    return normalized_difference(coverages.front(), std::span(coverages).subspan(1));
}

Dataset build_mixture(const Dataset& clean, const Dataset& replacement, int beta_percent, std::uint64_t seed) {
    if (beta_percent < 0 || beta_percent > 100) {
        fail(ErrorKind::configuration, "beta must lie in [0, 100], got " + std::to_string(beta_percent));
    }
    clean.validate();
    replacement.validate();
    const auto n = clean.size();
    const auto k = static_cast<std::size_t>(beta_percent) * n / 100;
    if (replacement.size() < k) {
        fail(ErrorKind::input, "replacement pool holds " + std::to_string(replacement.size()) + " inputs but " +
                                   std::to_string(k) + " are needed");
    }
    Dataset out = clean;
    out.name = clean.name + "_beta" + std::to_string(beta_percent);
    if (k == 0) {
        return out;
    }
    if (replacement.inputs.front().shape() != clean.inputs.front().shape()) {
        fail(ErrorKind::input, "replacement inputs have shape " + to_string(replacement.inputs.front().shape()) +
                                   " but clean inputs have " + to_string(clean.inputs.front().shape()));
    }
    std::mt19937_64 rng(seed);
    auto positions = draw_distinct(n, k, rng);
    std::sort(positions.begin(), positions.end());
    const auto sources = draw_distinct(replacement.size(), k, rng);

    const bool same_labels = out.labels.index() == replacement.labels.index();
    if (!same_labels) {
        out.labels = std::monostate{};
    }
    for (std::size_t i = 0; i < k; ++i) {
        out.inputs[positions[i]] = replacement.inputs[sources[i]];
        if (auto* l = std::get_if<ClassLabels>(&out.labels)) {
            (*l)[positions[i]] = std::get<ClassLabels>(replacement.labels)[sources[i]];
        } else if (auto* t = std::get_if<RegressionTargets>(&out.labels)) {
            (*t)[positions[i]] = std::get<RegressionTargets>(replacement.labels)[sources[i]];
        }
    }
    return out;
}

} // namespace nncov
