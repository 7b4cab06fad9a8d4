#include "nncov/cli.hpp"

#include "nncov/analysis.hpp"
#include "nncov/nncm.hpp"
#include "nncov/report.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <iomanip>
#include <optional>
#include <string>
#include <vector>

namespace nncov {

namespace {

using Clock = std::chrono::steady_clock;

constexpr const char* exit_code_help = R"(Exit codes:
  0  success
  1  internal error
  2  usage error (bad flags)
  3  configuration error (inconsistent options, missing training data)
  4  input error (dataset shape or content)
  5  format error (malformed file)
  6  validation error (inconsistent model)
  7  capability error (unsupported layer or dtype)
  8  numeric error (non-finite activation)
  9  I/O error)";

struct DataSource {
    std::string raw;
    std::string idx_images;
    std::string idx_labels;
    std::optional<std::size_t> limit;

    bool present() const { return !raw.empty() || !idx_images.empty(); }
};

struct RunConfig {
    std::string model;
    std::string criteria = "all";
    std::string outputs;
    DataSource tests;
    DataSource train;
    std::vector<double> nc_thresholds{0.0, 0.2, 0.5, 0.75};
    std::vector<std::size_t> kmnc_k{10, 1000};
    std::vector<std::size_t> tknc_k{10, 1000};
    std::string granularity = "neuron";
    double vc_ratio = 0.1;
    std::optional<std::size_t> pair_budget;
    std::uint64_t seed = 0;
    std::size_t stride = 0;
    unsigned jobs = 1;
    double profile_clip = 0.0;
    std::string save_profile;
    std::string load_profile;
    std::vector<std::string> compare;
    std::string heatmap;
    bool sequential = false;
    bool allow_missing_profile = false;
};

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

Dataset load_source(const DataSource& src, const Model& model, const std::string& what) {
    if (!src.raw.empty() && !src.idx_images.empty()) {
        fail(ErrorKind::configuration, what + ": give either a raw directory or IDX files, not both");
    }
    Dataset d;
    if (!src.raw.empty()) {
        d = load_raw(src.raw, src.limit);
    } else {
        std::optional<std::filesystem::path> labels;
        if (!src.idx_labels.empty()) {
            labels = src.idx_labels;
        }
        d = load_idx(src.idx_images, labels, src.limit);
    }
    if (d.empty()) {
        fail(ErrorKind::input, what + " dataset is empty");
    }
    const auto& shape = d.inputs.front().shape();
    if (shape != model.input_shape()) {
        if (element_count(shape) != element_count(model.input_shape())) {
            fail(ErrorKind::input, what + " inputs have shape " + to_string(shape) + " but the model expects " +
                                       to_string(model.input_shape()));
        }
        d = d.reshaped(model.input_shape());
    }
    return d;
}

void add_source_flags(CLI::App& app, DataSource& tests, DataSource* train) {
    app.add_option("--input-tests", tests.raw, "Raw test dataset directory");
    app.add_option("--idx-images", tests.idx_images, "IDX test images");
    app.add_option("--idx-labels", tests.idx_labels, "IDX test labels");
    app.add_option("--test", tests.limit, "Use only the first N test inputs");
    if (train != nullptr) {
        app.add_option("--input-train", train->raw, "Raw training dataset directory");
        app.add_option("--train-idx-images", train->idx_images, "IDX training images");
        app.add_option("--train-idx-labels", train->idx_labels, "IDX training labels");
        app.add_option("--train", train->limit, "Use only the first N training inputs");
    }
}

nlohmann::json config_echo(const RunConfig& c, const MeasureOptions& options, std::size_t tests,
                           std::optional<std::size_t> training, std::size_t stride) {
    nlohmann::json j = {
        {"criteria", c.criteria},
        {"granularity", c.granularity},
        {"nc_thresholds", options.coverage.nc_thresholds},
        {"kmnc_k", options.coverage.kmnc_k},
        {"tknc_k", options.coverage.tknc_k},
        {"boundary", options.coverage.boundary},
        {"test_count", tests},
        {"stride", stride},
        {"seed", c.seed},
        {"vc_ratio", c.vc_ratio},
    };
    j["training_count"] = training ? nlohmann::json(*training) : nlohmann::json(nullptr);
    j["pair_budget"] = c.pair_budget ? nlohmann::json(*c.pair_budget) : nlohmann::json(nullptr);
    nlohmann::json variants = nlohmann::json::array();
    if (options.mcdc) {
        for (auto v : options.mcdc->variants) {
            variants.push_back(to_string(v));
        }
    }
    j["mcdc_variants"] = std::move(variants);
    return j;
}

int do_run(const RunConfig& c, std::ostream& out, std::ostream& err) {
    if (c.criteria != "all" && c.criteria != "no-mcdc" && c.criteria != "mcdc") {
        fail(ErrorKind::configuration, "--criteria must be all, no-mcdc or mcdc");
    }
    if (!c.tests.present()) {
        fail(ErrorKind::configuration, "no test dataset: pass --input-tests or --idx-images");
    }
    if (!c.load_profile.empty() && c.train.present()) {
        fail(ErrorKind::configuration, "--load-profile and a training dataset are mutually exclusive");
    }
    const auto granularity = parse_granularity(c.granularity);
    const bool want_neuron = c.criteria != "mcdc";
    const bool want_mcdc = c.criteria != "no-mcdc";

    MeasureOptions options;
    options.coverage.granularity = granularity;
    options.coverage.nc_thresholds = c.nc_thresholds;
    options.coverage.kmnc_k = c.kmnc_k;
    options.coverage.tknc_k = c.tknc_k;
    options.neuron_criteria = want_neuron;
    options.jobs = c.jobs;
    if (want_mcdc) {
        McdcOptions m;
        m.vc_ratio = c.vc_ratio;
        m.pair_budget = c.pair_budget;
        m.seed = c.seed;
        m.jobs = c.jobs;
        options.mcdc = m;
    }
    options.coverage.validate();
    if (options.mcdc) {
        options.mcdc->validate();
    }

    const auto model = load_model(c.model);
    const auto tests = load_source(c.tests, model, "test");
    if (want_mcdc && tests.size() < 2) {
        fail(ErrorKind::configuration, "MC/DC works on input pairs: at least 2 test inputs are needed, got " +
                                           std::to_string(tests.size()));
    }

    std::vector<Timing> timings;
    std::vector<std::string> warnings;
    std::optional<Profile> bounds;
    std::optional<std::size_t> training_count;
    if (!c.load_profile.empty()) {
        bounds = load_profile(c.load_profile);
        check_compatible(*bounds, model, granularity);
    } else if (c.train.present()) {
        const auto train = load_source(c.train, model, "training");
        const auto start = Clock::now();
        bounds = profile(model, train.inputs, granularity, {c.profile_clip, c.jobs});
        timings.push_back({"profile", elapsed_ms(start)});
    }
    if (bounds) {
        training_count = bounds->training_count;
        if (!c.save_profile.empty()) {
            save_profile(*bounds, c.save_profile);
        }
    } else {
        std::vector<std::string> blockers;
        if (want_neuron) {
            if (!options.coverage.kmnc_k.empty()) {
                blockers.emplace_back("KMNC");
            }
            blockers.emplace_back("NBC");
            blockers.emplace_back("SNAC");
        }
        if (want_mcdc) {
            for (auto v : {McdcVariant::sv, McdcVariant::vs, McdcVariant::vv}) {
                blockers.emplace_back(to_string(family_of(v)));
            }
        }
        std::string names;
        for (const auto& b : blockers) {
            names += (names.empty() ? "" : ", ") + b;
        }
        if (!c.allow_missing_profile) {
            fail(ErrorKind::configuration, names +
                                               " need activation bounds from a training set: pass --input-train, "
                                               "--train-idx-images or --load-profile (or --allow-missing-profile)");
        }
        warnings.push_back("no training data: skipped " + names);
        err << "warning: " << warnings.back() << "\n";
        options.coverage.kmnc_k.clear();
        options.coverage.boundary = false;
        if (options.mcdc) {
            options.mcdc->variants = {McdcVariant::ss};
        }
    }
    const Profile* p = bounds ? &*bounds : nullptr;

    const auto start = Clock::now();
    auto measurement = c.sequential ? measure_sequential(model, tests.inputs, p, options)
                                    : measure(model, tests.inputs, p, options);
    for (auto& t : measurement.timings) {
        t.label = (c.sequential ? "sequential " : "simultaneous ") + t.label;
        timings.push_back(t);
    }
    timings.push_back({"coverage", elapsed_ms(start)});

    const auto stride = c.stride > 0 ? c.stride : std::max<std::size_t>(1, tests.size() / 10);
    const auto growth_start = Clock::now();
    auto curves = growth(model, tests.inputs, p, options, stride);
    timings.push_back({"growth", elapsed_ms(growth_start)});

    ReportBundle bundle;
    bundle.model = describe(model, granularity);
    bundle.config = config_echo(c, options, tests.size(), training_count, stride);
    bundle.criteria = with_stats(measurement.results);
    bundle.growth = std::move(curves);
    bundle.warnings = warnings;
    if (!c.heatmap.empty()) {
        bundle.heatmap = parse_criterion(c.heatmap);
    }
    if (const auto* labels = tests.class_labels(); labels != nullptr && model.task() == TaskKind::classification) {
        const auto pr = predict_labels(model, tests.inputs, *labels);
        bundle.accuracy = Accuracy{pr.correct, pr.total, pr.accuracy_percent};
    }
    if (!c.compare.empty()) {
        std::vector<Dataset> others;
        for (const auto& dir : c.compare) {
            others.push_back(load_source({dir, {}, {}, c.tests.limit}, model, "comparison"));
        }
        const auto cmp_start = Clock::now();
        auto run = nncov::compare(model, p, tests, others, options);
        timings.push_back({"comparison", elapsed_ms(cmp_start)});
        for (const auto& w : run.warnings) {
            bundle.warnings.push_back(w);
        }
        bundle.comparison = std::move(run);
    }
    bundle.timings = std::move(timings);
    emit_reports(bundle, c.outputs);

    out << "model " << model.name() << ": " << tests.size() << " tests, " << to_string(granularity)
        << " granularity\n";
    for (const auto& r : bundle.criteria) {
        out << std::left << std::setw(12) << r.result.id.label() << std::right << std::setw(10) << r.result.covered
            << " / " << std::left << std::setw(10) << r.result.total << std::right << format_number(r.result.percent)
            << "%\n";
    }
    out << "reports written to " << c.outputs << "\n";
    return exit_ok;
}

int do_profile(const RunConfig& c, std::ostream& out) {
    if (!c.train.present()) {
        fail(ErrorKind::configuration, "no training dataset: pass --input-train or --train-idx-images");
    }
    const auto model = load_model(c.model);
    const auto granularity = parse_granularity(c.granularity);
    const auto train = load_source(c.train, model, "training");
    const auto bounds = profile(model, train.inputs, granularity, {c.profile_clip, c.jobs});
    save_profile(bounds, c.save_profile);
    out << "profiled " << bounds.unit_total() << " units over " << bounds.training_count << " inputs into "
        << c.save_profile << "\n";
    return exit_ok;
}

} // namespace

int exit_code(ErrorKind kind) noexcept {
    return 3 + static_cast<int>(kind);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Structural coverage of feedforward neural networks", "nncov"};
    app.footer(exit_code_help);
    app.require_subcommand(1);

    RunConfig rc;
    auto* run = app.add_subcommand("run", "Measure coverage of a test set and write reports");
    run->add_option("--model", rc.model, "NNCM model bundle directory")->required();
    run->add_option("--criteria", rc.criteria, "all, no-mcdc or mcdc")->capture_default_str();
    run->add_option("--outputs", rc.outputs, "Report output directory")->required();
    add_source_flags(*run, rc.tests, &rc.train);
    run->add_option("--nc-thresholds", rc.nc_thresholds, "NC thresholds")->delimiter(',')->capture_default_str();
    run->add_option("--kmnc-k", rc.kmnc_k, "KMNC section counts")->delimiter(',')->capture_default_str();
    run->add_option("--tknc-k", rc.tknc_k, "TKNC K values")->delimiter(',')->capture_default_str();
    run->add_option("--granularity", rc.granularity, "neuron or channel")->capture_default_str();
    run->add_option("--vc-ratio", rc.vc_ratio, "MC/DC value-change ratio of the profiled range")
        ->capture_default_str();
    run->add_option("--pair-budget", rc.pair_budget, "Evaluate a seeded sample of this many test pairs");
    run->add_option("--seed", rc.seed, "Seed for pair sampling")->capture_default_str();
    run->add_option("--stride", rc.stride, "Growth-curve checkpoint stride (default: a tenth of the tests)");
    run->add_option("--jobs", rc.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    run->add_option("--profile-clip", rc.profile_clip, "Clip this percentage from each end of the bounds");
    run->add_option("--save-profile", rc.save_profile, "Write the training profile to this directory");
    run->add_option("--load-profile", rc.load_profile, "Read a saved training profile");
    run->add_option("--compare", rc.compare, "Raw datasets compared against the test set");
    run->add_option("--heatmap", rc.heatmap, "Criterion shown in the HTML heatmap, e.g. NC(0.5)");
    run->add_flag("--sequential", rc.sequential, "Run one inference pass per criterion");
    run->add_flag("--allow-missing-profile", rc.allow_missing_profile,
                  "Without training data, skip the criteria that need bounds instead of failing");

    auto* prof = app.add_subcommand("profile", "Profile activation bounds on a training set");
    prof->add_option("--model", rc.model, "NNCM model bundle directory")->required();
    prof->add_option("--input-train", rc.train.raw, "Raw training dataset directory");
    prof->add_option("--train-idx-images", rc.train.idx_images, "IDX training images");
    prof->add_option("--train", rc.train.limit, "Use only the first N training inputs");
    prof->add_option("--granularity", rc.granularity, "neuron or channel")->capture_default_str();
    prof->add_option("--profile-clip", rc.profile_clip, "Clip this percentage from each end of the bounds");
    prof->add_option("--save-profile", rc.save_profile, "Output directory")->required();
    prof->add_option("--jobs", rc.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);

    std::string clean;
    std::string replacement;
    std::string mix_out;
    int beta = 0;
    std::uint64_t mix_seed = 0;
    auto* mix = app.add_subcommand("mix", "Replace beta% of a clean dataset with inputs from another");
    mix->add_option("--clean", clean, "Raw clean dataset directory")->required();
    mix->add_option("--replacement", replacement, "Raw replacement dataset directory")->required();
    mix->add_option("--beta", beta, "Percentage of inputs to replace")->required();
    mix->add_option("--seed", mix_seed, "Selection seed")->capture_default_str();
    mix->add_option("--outputs", mix_out, "Output dataset directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    }

    try {
        if (run->parsed()) {
            return do_run(rc, out, err);
        }
        if (prof->parsed()) {
            return do_profile(rc, out);
        }
        auto mixed = build_mixture(load_raw(clean), load_raw(replacement), beta, mix_seed);
        save_raw(mixed, mix_out);
        out << "wrote " << mixed.size() << " inputs to " << mix_out << "\n";
        return exit_ok;
    } catch (const Error& e) {
        err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return exit_internal;
    }
}

} // namespace nncov
