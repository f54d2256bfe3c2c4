// lifecurve: batch sigmoid-lifecycle analysis over entity event streams.
// Subcommands: fit, lifepath, dist, sample, validate, entropy.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lifecurve/lifecurve.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lifecurve;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct RunConfig {
    std::string input_path;
    std::string kind = "events";  // events | occurrences
    int pad_length = 100;
    std::vector<std::string> cutoffs;  // YYYY-MM
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    int jobs = 1;
    std::string config_path;

    LifepathOptions lifepath;
    GenerativeModelParams model;
};

void apply_json_config(RunConfig& cfg) {
    if (cfg.config_path.empty()) return;
    std::ifstream in(cfg.config_path);
    if (!in) throw data_error("config_missing", "cannot open " + cfg.config_path);
    json j = json::parse(in);
    if (j.contains("pad_length")) cfg.pad_length = j["pad_length"].get<int>();
    if (j.contains("fit")) {
        const auto& f = j["fit"];
        auto& o = cfg.lifepath.fit;
        if (f.contains("amplitude_max")) o.amplitude_max = f["amplitude_max"];
        if (f.contains("ln_slope_max")) o.ln_slope_max = f["ln_slope_max"];
        if (f.contains("t0_max")) o.t0_max = f["t0_max"];
        if (f.contains("step_tol")) o.step_tol = f["step_tol"];
        if (f.contains("grad_tol")) o.grad_tol = f["grad_tol"];
        if (f.contains("max_iterations")) o.max_iterations = f["max_iterations"];
        if (f.contains("restart_slope_factors")) {
            auto v = f["restart_slope_factors"].get<std::vector<double>>();
            for (std::size_t i = 0; i < o.restart_slope_factors.size() && i < v.size(); ++i)
                o.restart_slope_factors[i] = v[i];
        }
    }
    if (j.contains("lifepath")) {
        const auto& l = j["lifepath"];
        auto& o = cfg.lifepath;
        if (l.contains("phase_delta_months")) o.phase_delta_months = l["phase_delta_months"];
        if (l.contains("dormancy_horizon_months"))
            o.dormancy_horizon_months = l["dormancy_horizon_months"];
        if (l.contains("deactivated_saturation_max"))
            o.deactivated_saturation_max = l["deactivated_saturation_max"];
        if (l.contains("stabilization_epsilon"))
            o.stabilization_epsilon = l["stabilization_epsilon"];
    }
    if (j.contains("model")) {
        const auto& m = j["model"];
        auto& g = cfg.model;
        if (m.contains("t0a")) g.t0a = m["t0a"];
        if (m.contains("t0b")) g.t0b = m["t0b"];
        if (m.contains("regime_weights")) {
            auto v = m["regime_weights"].get<std::vector<double>>();
            if (v.size() != 3) throw data_error("bad_model", "regime_weights needs 3 values");
            g.regime_weights = {v[0], v[1], v[2]};
        }
        if (m.contains("n0")) g.n0 = m["n0"];
        if (m.contains("n1")) g.n1 = m["n1"];
        if (m.contains("a0")) g.a0 = m["a0"];
        if (m.contains("a1")) g.a1 = m["a1"];
        if (m.contains("a2")) g.a2 = m["a2"];
        if (m.contains("b0")) g.b0 = m["b0"];
        if (m.contains("b1")) g.b1 = m["b1"];
        if (m.contains("mu2")) g.mu2 = m["mu2"];
        if (m.contains("sigma2")) g.sigma2 = m["sigma2"];
    }
    cfg.lifepath.fit.pad_length = cfg.pad_length;
}

struct Dataset {
    std::map<std::string, ActivitySeries> series;
    ObservationWindow window;
};

Dataset load_dataset(const RunConfig& cfg, std::optional<MonthIndex> end_override) {
    std::ifstream in(cfg.input_path);
    if (!in) throw data_error("input_missing", "cannot open " + cfg.input_path);
    Dataset data;
    MonthIndex lo = 0, hi = 0;
    bool any = false;
    if (cfg.kind == "events") {
        auto parsed = parse_events(in);
        for (const auto& e : parsed.row_errors)
            std::cerr << "warning: " << cfg.input_path << ":" << e.line << ": "
                      << e.message << "\n";
        if (parsed.records.empty())
            throw data_error("empty_input", "no parseable event rows");
        for (const auto& r : parsed.records) {
            if (!any || r.month < lo) lo = r.month;
            if (!any || r.month > hi) hi = r.month;
            any = true;
        }
        data.window = {lo, end_override.value_or(hi)};
        std::vector<EventRecord> kept;
        for (const auto& r : parsed.records)
            if (r.month <= data.window.end_month) kept.push_back(r);
        data.series = bin_monthly(kept, data.window);
    } else if (cfg.kind == "occurrences") {
        auto parsed = parse_occurrences(in);
        for (const auto& e : parsed.row_errors)
            std::cerr << "warning: " << cfg.input_path << ":" << e.line << ": "
                      << e.message << "\n";
        if (parsed.records.empty())
            throw data_error("empty_input", "no parseable occurrence rows");
        for (const auto& r : parsed.records) {
            if (!any || r.month < lo) lo = r.month;
            if (!any || r.month > hi) hi = r.month;
            any = true;
        }
        data.window = {lo, end_override.value_or(hi)};
        std::vector<OccurrenceRecord> kept;
        for (const auto& r : parsed.records)
            if (r.month <= data.window.end_month) kept.push_back(r);
        data.series = bin_occurrences(kept, data.window);
    } else {
        throw data_error("bad_kind", "kind must be 'events' or 'occurrences'");
    }
    if (data.series.empty()) throw data_error("empty_input", "no entities in window");
    return data;
}

std::vector<MonthIndex> parse_cutoffs(const RunConfig& cfg) {
    std::vector<MonthIndex> out;
    for (const auto& c : cfg.cutoffs) out.push_back(parse_month(c));
    std::sort(out.begin(), out.end());
    return out;
}

/// Deterministic parallel map over the (sorted) entity list: results land in
/// a pre-sized vector indexed by entity order, so output is independent of
/// the worker count.
template <typename Work>
void parallel_over_entities(const std::map<std::string, ActivitySeries>& series,
                            int jobs, Work&& work) {
    std::vector<const ActivitySeries*> flat;
    flat.reserve(series.size());
    for (const auto& [id, s] : series) flat.push_back(&s);
    std::atomic<std::size_t> next{0};
    auto body = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= flat.size()) break;
            work(i, *flat[i]);
        }
    };
    int n = std::max(1, jobs);
    if (n == 1) {
        body();
        return;
    }
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(body);
    for (auto& t : pool) t.join();
}

std::ofstream open_out(const RunConfig& cfg, const std::string& name) {
    fs::create_directories(cfg.out_dir);
    fs::path p = fs::path(cfg.out_dir) / name;
    std::ofstream out(p, std::ios::binary);  // LF line endings everywhere
    if (!out) throw data_error("output_failed", "cannot write " + p.string());
    return out;
}

std::string fmt(double v) { return format_number(v); }

// ---------------------------------------------------------------- fit

struct FitRow {
    std::string line;
    std::string curve_lines;
    bool fitted = false;
};

int cmd_fit(const RunConfig& cfg) {
    auto cutoffs = parse_cutoffs(cfg);
    std::optional<MonthIndex> end;
    if (!cutoffs.empty()) end = cutoffs.back();
    auto data = load_dataset(cfg, end);

    std::vector<FitRow> rows(data.series.size());
    parallel_over_entities(data.series, cfg.jobs, [&](std::size_t i, const ActivitySeries& s) {
        std::ostringstream line, curves;
        line << s.entity_id << ',' << month_to_string(s.start_month) << ','
             << s.total() << ',';
        if (insufficient_history(s, data.window)) {
            line << ",,,,,,,,insufficient_history";
            rows[i].line = line.str();
            return;
        }
        try {
            auto norm = normalize(s, cfg.pad_length, data.window.epoch_month);
            auto fit = fit_sigmoid(norm, cfg.lifepath.fit);
            auto lin = fit_linear(norm);
            auto cal = denormalize_params(fit.amplitude, fit.slope, fit.t0, norm.scale);
            line << (fit.converged ? 1 : 0) << ',' << fmt(cal.amplitude) << ','
                 << fmt(std::log(fit.slope)) << ',' << fmt(cal.slope_per_month) << ','
                 << fmt(month_to_years(cal.inflection_month)) << ','
                 << fmt(fit.saturation_status) << ','
                 << (classify(fit) == Saturation::saturated ? "saturated" : "unsaturated")
                 << ',' << fmt(fit.reduced_chi2) << ',' << fmt(lin.reduced_chi2) << ',';
            rows[i].fitted = true;
            auto cum = cumulative(s);
            for (std::size_t k = 0; k < s.counts.size(); ++k) {
                MonthIndex m = s.start_month + static_cast<MonthIndex>(k);
                double fitted = sigmoid_eval(
                    fit.amplitude, fit.slope, fit.t0,
                    norm.scale.t_of_month(static_cast<double>(m))) *
                    static_cast<double>(norm.scale.final_cumulative);
                curves << s.entity_id << ',' << month_to_string(m) << ','
                       << s.counts[k] << ',' << cum[k] << ',' << fmt(fitted) << '\n';
            }
        } catch (const Error& e) {
            line << ",,,,,,,,," << e.code();
        }
        rows[i].line = line.str();
        rows[i].curve_lines = curves.str();
    });

    auto fits = open_out(cfg, "fits.csv");
    fits << "entity_id,start_month,total,converged,amplitude,ln_slope,slope_per_month,"
            "inflection_date,saturation_status,classification,reduced_chi2_sigmoid,"
            "reduced_chi2_linear,flag\n";
    std::size_t fitted = 0;
    for (const auto& r : rows) {
        fits << r.line << '\n';
        if (r.fitted) ++fitted;
    }
    auto curves = open_out(cfg, "curves.csv");
    curves << "entity_id,month,count,cumulative,fitted\n";
    for (const auto& r : rows) curves << r.curve_lines;
    if (fitted == 0) {
        std::cerr << "error: every entity failed to fit\n";
        return kExitNumeric;
    }
    return kExitOk;
}

// ---------------------------------------------------------------- lifepath

std::vector<int> analysis_years(const Dataset& data, const std::vector<MonthIndex>& cutoffs) {
    std::vector<int> years;
    if (!cutoffs.empty()) {
        for (auto c : cutoffs) years.push_back(month_year(c));
    } else {
        for (int y = month_year(data.window.epoch_month);
             y <= month_year(data.window.end_month); ++y)
            years.push_back(y);
    }
    std::sort(years.begin(), years.end());
    years.erase(std::unique(years.begin(), years.end()), years.end());
    return years;
}

std::vector<Lifepath> compute_lifepaths(const RunConfig& cfg, const Dataset& data,
                                        const std::vector<int>& years) {
    std::vector<Lifepath> paths(data.series.size());
    parallel_over_entities(data.series, cfg.jobs, [&](std::size_t i, const ActivitySeries& s) {
        paths[i] = expanding_window_fits(s, years, data.window.epoch_month, cfg.lifepath);
    });
    return paths;
}

int cmd_lifepath(const RunConfig& cfg) {
    auto cutoffs = parse_cutoffs(cfg);
    auto data = load_dataset(cfg, std::nullopt);
    auto years = analysis_years(data, cutoffs);
    auto paths = compute_lifepaths(cfg, data, years);

    auto out = open_out(cfg, "lifepath.csv");
    out << "entity_id,analysis_year,amplitude,ln_slope,inflection_date,expected_leave,"
           "expected_total,status,converged\n";
    std::size_t points = 0;
    for (const auto& path : paths) {
        for (const auto& p : path.points) {
            out << path.entity_id << ',' << p.analysis_year << ','
                << fmt(p.calendar.amplitude) << ',' << fmt(p.ln_slope_per_month()) << ','
                << fmt(display_inflection_years(p, cfg.lifepath)) << ',';
            if (p.expected_leave) out << fmt(*p.expected_leave);
            out << ',' << fmt(p.expected_total) << ',' << phase_name(p.status) << ','
                << (p.fit.converged ? 1 : 0) << '\n';
            ++points;
        }
    }
    if (points == 0) {
        std::cerr << "error: no lifepath points could be fit\n";
        return kExitNumeric;
    }
    return kExitOk;
}

// ---------------------------------------------------------------- dist

int cmd_dist(const RunConfig& cfg) {
    auto cutoffs = parse_cutoffs(cfg);
    auto data = load_dataset(cfg, std::nullopt);
    std::vector<MonthIndex> window_ends = cutoffs;
    if (window_ends.empty()) {
        // expanding yearly windows from the epoch
        for (int y = month_year(data.window.epoch_month);
             y <= month_year(data.window.end_month); ++y)
            window_ends.push_back(make_month(y, 12));
    }

    std::vector<SurvivalDistribution> dists;
    for (std::size_t w = 0; w < window_ends.size(); ++w) {
        std::vector<std::int64_t> sizes;
        for (const auto& [id, s] : data.series) {
            ActivitySeries cut;
            if (!truncate_series(s, window_ends[w], cut)) continue;
            std::int64_t total = cut.total();
            if (total >= 1) sizes.push_back(total);
        }
        if (sizes.empty()) continue;
        dists.push_back(survival(sizes, static_cast<int>(w) + 1));
    }
    if (dists.empty()) throw data_error("empty_input", "no window has any activity");

    auto surv = open_out(cfg, "survival.csv");
    surv << "window_years,J,N\n";
    for (const auto& d : dists)
        for (std::int64_t j = 1; j <= d.j_max(); ++j)
            if (d.n_at(j) >= 1)
                surv << d.window_years << ',' << j << ',' << d.n_at(j) << '\n';

    json fit_json;
    try {
        auto fit = fit_segmented_powerlaw(dists.back());
        fit_json = {{"alpha1", fit.alpha1},
                    {"alpha2", fit.alpha2},
                    {"breakpoint", fit.breakpoint},
                    {"stderr1", fit.alpha1_stderr},
                    {"stderr2", fit.alpha2_stderr},
                    {"sse", fit.sse},
                    {"degenerate", fit.degenerate}};
    } catch (const Error& e) {
        fit_json = {{"error", e.code()}};
    }
    open_out(cfg, "segmented_fit.json") << fit_json.dump(2) << '\n';

    json collapse_json;
    if (dists.size() >= 3) {
        try {
            auto collapse = scaling_collapse(dists);
            collapse_json = {{"beta1", collapse.beta1},
                             {"beta2", collapse.beta2},
                             {"dispersion", collapse.dispersion}};
        } catch (const Error& e) {
            collapse_json = {{"error", e.code()}};
        }
    } else {
        collapse_json = {{"error", "insufficient_windows"}};
    }
    open_out(cfg, "collapse.json") << collapse_json.dump(2) << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- sample

int cmd_sample(const RunConfig& cfg, std::size_t count) {
    cfg.model.validate();
    auto pop = sample_population(count, cfg.model, cfg.seed);
    auto sizes = to_order_counts(pop);

    auto out = open_out(cfg, "population.csv");
    out << "t0,m_prime,a_prime,orders\n";
    for (std::size_t i = 0; i < pop.size(); ++i)
        out << fmt(pop[i].t0) << ',' << fmt(pop[i].m_prime) << ','
            << fmt(pop[i].a_prime) << ',' << sizes[i] << '\n';

    auto dist = survival(sizes);
    auto surv = open_out(cfg, "sample_survival.csv");
    surv << "window_years,J,N\n";
    for (std::int64_t j = 1; j <= dist.j_max(); ++j)
        if (dist.n_at(j) >= 1) surv << "0," << j << ',' << dist.n_at(j) << '\n';

    json fit_json;
    try {
        auto fit = fit_segmented_powerlaw(dist);
        fit_json = {{"alpha1", fit.alpha1},
                    {"alpha2", fit.alpha2},
                    {"breakpoint", fit.breakpoint},
                    {"stderr1", fit.alpha1_stderr},
                    {"stderr2", fit.alpha2_stderr},
                    {"sse", fit.sse},
                    {"degenerate", fit.degenerate}};
    } catch (const Error& e) {
        fit_json = {{"error", e.code()}};
    }
    open_out(cfg, "sample_fit.json") << fit_json.dump(2) << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- validate

int cmd_validate(const RunConfig& cfg, int leave_year) {
    auto cutoffs = parse_cutoffs(cfg);
    auto data = load_dataset(cfg, std::nullopt);
    auto years = analysis_years(data, cutoffs);
    auto paths = compute_lifepaths(cfg, data, years);
    auto cohort = select_cohort(paths, leave_year);
    auto report = score_cohort(cohort, leave_year);

    json per_year = json::object();
    for (const auto& [year, s] : report.per_year)
        per_year[std::to_string(year)] = {{"mean_expected_leave", s.mean_expected_leave},
                                          {"variance", s.variance},
                                          {"mean_error", s.mean_error},
                                          {"within_1yr", s.within_1yr},
                                          {"within_2yr", s.within_2yr},
                                          {"scored", s.scored}};
    json j = {{"leave_year", report.leave_year},
              {"cohort_size", report.cohort_size},
              {"per_year", per_year}};
    open_out(cfg, "report.json") << j.dump(2) << '\n';

    auto csv = open_out(cfg, "report.csv");
    csv << "analysis_year,mean_expected_leave,variance,mean_error,within_1yr,"
           "within_2yr,scored\n";
    for (const auto& [year, s] : report.per_year)
        csv << year << ',' << fmt(s.mean_expected_leave) << ',' << fmt(s.variance)
            << ',' << fmt(s.mean_error) << ',' << fmt(s.within_1yr) << ','
            << fmt(s.within_2yr) << ',' << s.scored << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- entropy

int cmd_entropy(const RunConfig& cfg) {
    std::ifstream in(cfg.input_path);
    if (!in) throw data_error("input_missing", "cannot open " + cfg.input_path);
    // occurrence table with the middle column read as an opaque state label
    std::string line;
    if (!std::getline(in, line))
        throw format_error("bad_header", "empty entropy input");
    auto header = detail::strip_cr(line);
    if (header != "entity_id,month,count" && header != "entity_id,state,count")
        throw format_error("bad_header",
                           "expected 'entity_id,month,count' or 'entity_id,state,count'");
    std::map<std::string, std::map<std::string, double>> occurrences;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        auto sv = detail::strip_cr(line);
        if (sv.empty()) continue;
        auto fields = detail::split_csv_line(sv);
        if (fields.size() != 3 || fields[0].empty())
            throw format_error("bad_row", "line " + std::to_string(lineno));
        double count = 0;
        try {
            count = std::stod(std::string(fields[2]));
        } catch (...) {
            throw format_error("bad_count", "line " + std::to_string(lineno));
        }
        occurrences[std::string(fields[0])][std::string(fields[1])] += count;
    }
    if (occurrences.empty()) throw data_error("empty_input", "no occurrence rows");

    auto out = open_out(cfg, "entropy.csv");
    out << "entity_id,entropy\n";
    for (const auto& [id, states] : occurrences) {
        OccurrenceVector v;
        for (const auto& [label, count] : states) {
            v.labels.push_back(label);
            v.counts.push_back(count);
        }
        out << id << ',' << fmt(shannon_entropy(v)) << '\n';
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sigmoid lifecycle analysis of entity activity series"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::size_t sample_count = 6065;
    int leave_year = 0;

    auto add_common = [&](CLI::App* sub, bool needs_input) {
        auto* in = sub->add_option("--input", cfg.input_path, "input CSV path");
        if (needs_input) in->required();
        sub->add_option("--kind", cfg.kind, "input kind: events|occurrences")
            ->check(CLI::IsMember({"events", "occurrences"}));
        sub->add_option("--pad", cfg.pad_length, "zero-padding months")
            ->check(CLI::NonNegativeNumber);
        sub->add_option("--cutoff", cfg.cutoffs, "analysis cutoff YYYY-MM (repeatable)");
        sub->add_option("--out", cfg.out_dir, "output directory");
        sub->add_option("--seed", cfg.seed, "random seed");
        sub->add_option("--jobs", cfg.jobs, "worker threads")
            ->check(CLI::PositiveNumber);
        sub->add_option("--config", cfg.config_path, "JSON config path");
    };

    auto* fit_cmd = app.add_subcommand("fit", "per-entity sigmoid and linear fits");
    add_common(fit_cmd, true);
    auto* lifepath_cmd =
        app.add_subcommand("lifepath", "expanding-window fits per entity per year");
    add_common(lifepath_cmd, true);
    auto* dist_cmd =
        app.add_subcommand("dist", "survival distributions, segmented fit, collapse");
    add_common(dist_cmd, true);
    auto* sample_cmd =
        app.add_subcommand("sample", "draw a population from the generative model");
    add_common(sample_cmd, false);
    sample_cmd->add_option("--count", sample_count, "population size");
    auto* validate_cmd =
        app.add_subcommand("validate", "score leaving-time predictions for a cohort");
    add_common(validate_cmd, true);
    validate_cmd->add_option("--leave-year", leave_year, "cohort leave year")->required();
    auto* entropy_cmd =
        app.add_subcommand("entropy", "Shannon entropy of occurrence tables");
    add_common(entropy_cmd, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        apply_json_config(cfg);
        cfg.lifepath.fit.pad_length = cfg.pad_length;
        if (fit_cmd->parsed()) return cmd_fit(cfg);
        if (lifepath_cmd->parsed()) return cmd_lifepath(cfg);
        if (dist_cmd->parsed()) return cmd_dist(cfg);
        if (sample_cmd->parsed()) return cmd_sample(cfg, sample_count);
        if (validate_cmd->parsed()) return cmd_validate(cfg, leave_year);
        if (entropy_cmd->parsed()) return cmd_entropy(cfg);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind() == ErrorKind::Numeric ? kExitNumeric : kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
