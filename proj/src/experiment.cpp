#include "opplab/experiment.hpp"

#include "opplab/expansion.hpp"
#include "opplab/statistics.hpp"
#include "opplab/verifier.hpp"

#include "json.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace opplab {

namespace fs = std::filesystem;
using ordered = nlohmann::ordered_json;

namespace {

// --- formatting ------------------------------------------------------------------

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_short(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string rat_str(const Rational& r) {
    return to_string(BigInt(r.get_num())) + "/" + to_string(BigInt(r.get_den()));
}

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

// Minimal RFC-4180 reader for the report path. Handles quoted fields with
// escaped quotes; our writers never emit embedded newlines.
std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::vector<std::string> row;
        std::string field;
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            const char c = line[i];
            if (quoted) {
                if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else if (c == '"') {
                    quoted = false;
                } else {
                    field += c;
                }
            } else if (c == '"') {
                quoted = true;
            } else if (c == ',') {
                row.push_back(std::move(field));
                field.clear();
            } else {
                field += c;
            }
        }
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string sha256_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return "";
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[65536];
    while (in) {
        in.read(buf, sizeof buf);
        const std::streamsize got = in.gcount();
        if (got > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(got));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

unsigned resolve_threads(unsigned configured) {
    if (const char* env = std::getenv("OPPLAB_THREADS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end && *end == '\0' && end != env) return static_cast<unsigned>(v);
    }
    return configured;
}

// Accumulates into the caller's state so a panic still leaves everything
// produced so far on disk.
struct TaskResult {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    ordered summary;
    ordered streams = ordered::array();
    std::vector<fs::path> side_files;  // extra artifacts (digits.txt)
    int exit_code = 0;
};

void note_stream(TaskResult& res, const char* space, const std::string& indices) {
    res.streams.push_back(ordered{{"space", space}, {"indices", indices}});
}

// --- task runners ----------------------------------------------------------------

void run_expand_task(const ExperimentConfig& cfg, const fs::path& dir, TaskResult& res) {
    res.header = {"k", "digit", "partial_sum", "defect"};
    const Scheme scheme = scheme_from_name(cfg.model_preset);
    ExpandOptions opt;
    opt.max_digits = cfg.expand_params.max_digits;
    const DigitSequence seq = expand(cfg.expand_params.x, scheme, opt);

    std::ofstream digits(dir / "digits.txt", std::ios::binary);
    for (std::size_t k = 1; k <= seq.digits.size(); ++k) {
        digits << to_string(seq.digits[k - 1]) << '\n';
        res.rows.push_back({std::to_string(k), to_string(seq.digits[k - 1]),
                            rat_str(reconstruct(seq, k)),
                            rat_str(defect(cfg.expand_params.x, seq, k))});
    }
    digits.close();
    res.side_files.push_back(dir / "digits.txt");

    res.summary["scheme"] = scheme_name(scheme);
    res.summary["x"] = rat_str(cfg.expand_params.x);
    res.summary["digits"] = seq.digits.size();
    res.summary["terminated"] = seq.terminated;
    res.summary["hit_digit_cap"] = seq.hit_digit_cap;
    res.summary["final_defect"] =
        rat_str(defect(cfg.expand_params.x, seq, seq.digits.size()));
}

void run_sample_task(const ExperimentConfig& cfg, TaskResult& res) {
    res.header = {"trajectory", "step", "digit", "log_digit", "r"};
    const SampleParams& p = cfg.sample_params;
    note_stream(res, "main", "0.." + std::to_string(p.trajectories - 1));
    for (std::size_t t = 0; t < p.trajectories; ++t) {
        const Trajectory traj = sample_trajectory(
            cfg.model, p.n_digits, RandomStream(cfg.seed, StreamSpace::main, t), cfg.sampler);
        for (std::size_t j = 0; j < traj.log_b.size(); ++j) {
            res.rows.push_back({std::to_string(t), std::to_string(j + 1),
                                j < traj.b.size() ? to_string(traj.b[j]) : std::string(),
                                fmt17(traj.log_b[j]),
                                j >= 1 ? fmt17(traj.r[j - 1]) : std::string()});
        }
    }
    res.summary["trajectories"] = p.trajectories;
    res.summary["n_digits"] = p.n_digits;
    res.summary["mode"] = cfg.sampler.mode == SampleMode::exact ? "exact" : "fast";
}

void run_verify_task(const ExperimentConfig& cfg, TaskResult& res) {
    res.header = {"check", "row", "inputs", "lhs", "rhs", "margin", "se", "skipped", "note"};
    const VerifyParams& p = cfg.verify_params;
    VerifyOptions opt;
    opt.seed = cfg.seed;
    opt.threads = resolve_threads(cfg.threads);
    opt.k_sigma = p.k_sigma;
    opt.chain_step = p.chain_step;
    opt.sampler = cfg.sampler;
    const double alpha = p.alpha > 0 ? p.alpha : cfg.model.alpha_meta;
    note_stream(res, "verifier", "op<<40 | sub<<36 | draw");

    LemmaReport rep;
    if (p.check == "dominance")
        rep = verify_dominance(cfg.model, p.x_grid, p.samples, opt);
    else if (p.check == "truncated-moments")
        rep = verify_trunc_moments(cfg.model, p.q_grid, p.t_grid, p.samples, opt);
    else if (p.check == "tail-sum")
        rep = verify_tail_sum(cfg.model, p.weights, alpha, p.n_grid, p.trajectories, opt);
    else if (p.check == "moment-bound")
        rep = verify_moment_bound(cfg.model, p.weights, p.p, p.l_prime, p.n_grid, p.samples,
                                  opt);
    else if (p.check == "second-moment")
        rep = verify_second_moment(cfg.model, p.weights, alpha, p.n_grid, p.samples,
                                   p.a_scale, opt);
    else
        rep = verify_cov_bound(cfg.model, p.pairs, p.samples, p.p, opt);

    std::size_t skipped = 0;
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        const LemmaRow& row = rep.rows[i];
        skipped += row.skipped ? 1u : 0u;
        res.rows.push_back({rep.check_id, std::to_string(i), row.inputs, fmt17(row.lhs),
                            fmt17(row.rhs), fmt17(row.margin), fmt17(row.se),
                            row.skipped ? "1" : "0", row.note});
    }
    res.summary["check"] = rep.check_id;
    res.summary["model"] = rep.model_name;
    res.summary["verdict"] = verdict_name(rep.verdict);
    res.summary["k_sigma"] = rep.k_sigma;
    res.summary["grid"] = rep.grid_desc;
    res.summary["header"] = rep.header_note;
    res.summary["rows"] = rep.rows.size();
    res.summary["rows_skipped"] = skipped;
    if (rep.verdict == Verdict::fail) res.exit_code = 1;
}

void run_law_task(const ExperimentConfig& cfg, TaskResult& res) {
    res.header = {"statistic", "mode",  "eps",   "eps_effective", "n",
                  "exceed",    "total", "p_hat", "ci_lo",         "ci_hi"};
    const LawParams& p = cfg.law_params;
    const char* mode = p.as_mode ? "as" : "prob";

    std::optional<TriangularArray> arr;
    if (p.statistic == LawId::triangular)
        arr.emplace(p.array_kind, p.array_scale, p.n_grid.back(), p.m_factor);

    if (p.validate) {
        const WeightValidation val =
            p.statistic == LawId::triangular
                ? validate_weights(cfg.model, *arr, p.n_grid.back(), p.n_grid)
                : validate_weights(p.statistic, p.weights, cfg.model.alpha_meta,
                                   p.n_grid.back(), p.n_grid);
        ordered conditions = ordered::array();
        for (const ConditionTrend& c : val.conditions)
            conditions.push_back(ordered{{"condition", c.condition},
                                         {"rate_note", c.rate_note},
                                         {"bounded_mode", c.bounded_mode},
                                         {"tail_decreasing", c.tail_decreasing},
                                         {"final_value", c.final_value},
                                         {"pass", c.pass}});
        res.summary["validators"] =
            ordered{{"pass", val.pass}, {"heuristic", val.heuristic},
                    {"conditions", std::move(conditions)}};
    }

    SeriesOptions sopt;
    sopt.replications = p.replications;
    sopt.seed = cfg.seed;
    sopt.threads = resolve_threads(cfg.threads);
    sopt.sampler = cfg.sampler;
    sopt.centering_trajectories = p.centering_trajectories;
    note_stream(res, "main", "0.." + std::to_string(p.replications - 1));
    note_stream(res, "centering", "one per grid point (mc centering only)");

    const StatisticSeries series = compute_series(
        cfg.model, p.statistic, p.weights, arr ? &*arr : nullptr, p.n_grid, sopt);
    const DiagTable diag =
        p.as_mode ? as_convergence_diag(series, p.eps) : prob_convergence_diag(series, p.eps);

    for (const DiagRow& row : diag.rows)
        res.rows.push_back({law_name(p.statistic), mode, fmt17(row.eps),
                            fmt17(row.eps_effective), std::to_string(row.n),
                            std::to_string(row.exceed), std::to_string(row.total),
                            fmt17(row.p_hat), fmt17(row.ci.lo), fmt17(row.ci.hi)});

    // Trend summary per eps level: diagnostic only, never an exit code.
    ordered trend = ordered::array();
    for (double eps : p.eps) {
        std::vector<const DiagRow*> level;
        for (const DiagRow& row : diag.rows)
            if (row.eps == eps) level.push_back(&row);
        bool nonincreasing = true;
        for (std::size_t i = 1; i < level.size(); ++i)
            if (level[i]->p_hat > level[i - 1]->p_hat) nonincreasing = false;
        trend.push_back(ordered{{"eps", eps},
                                {"nonincreasing", nonincreasing},
                                {"first_p_hat", level.empty() ? 0.0 : level.front()->p_hat},
                                {"final_p_hat", level.empty() ? 0.0 : level.back()->p_hat}});
    }
    res.summary["statistic"] = law_name(p.statistic);
    res.summary["formula"] = law_formula(p.statistic);
    res.summary["mode"] = mode;
    res.summary["replications"] = p.replications;
    res.summary["centering_exact"] = series.centering_exact;
    res.summary["low_power"] = diag.low_power;
    res.summary["trend"] = std::move(trend);
}

void write_csv(const fs::path& p, const TaskResult& res) {
    std::ofstream out(p, std::ios::binary);
    for (std::size_t i = 0; i < res.header.size(); ++i)
        out << (i ? "," : "") << csv_quote(res.header[i]);
    out << '\n';
    for (const auto& row : res.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out << (i ? "," : "") << csv_quote(row[i]);
        out << '\n';
    }
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    RunOutcome outcome;
    outcome.dir = fs::path(cfg.output_dir);
    fs::create_directories(outcome.dir);

    TaskResult res;
    res.summary["task"] = task_name(cfg.task);
    res.summary["model"] = cfg.model.name;
    res.summary["seed"] = cfg.seed;
    try {
        switch (cfg.task) {
            case TaskKind::expand: run_expand_task(cfg, outcome.dir, res); break;
            case TaskKind::sample: run_sample_task(cfg, res); break;
            case TaskKind::verify: run_verify_task(cfg, res); break;
            case TaskKind::law: run_law_task(cfg, res); break;
        }
    } catch (const std::exception& e) {
        outcome.partial = true;
        outcome.error = e.what();
        res.summary["error"] = e.what();
    }

    res.summary["status"] = outcome.partial ? "partial" : "complete";
    write_csv(outcome.dir / "results.csv", res);
    {
        std::ofstream sum(outcome.dir / "summary.json", std::ios::binary);
        sum << res.summary.dump(2) << '\n';
    }

    // Manifest last: it hashes everything else. Timestamps live only here.
    ordered manifest;
    manifest["tool"] = kToolName;
    manifest["version"] = kToolVersion;
    manifest["created_utc"] = utc_now();
    manifest["elapsed_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    manifest["task"] = task_name(cfg.task);
    manifest["seed"] = cfg.seed;
    manifest["threads"] = resolve_threads(cfg.threads);
    manifest["status"] = outcome.partial ? "partial" : "complete";
    if (outcome.partial) manifest["error"] = outcome.error;
    manifest["config"] = ordered::parse(cfg.resolved);
    manifest["streams"] = res.streams;
    ordered outputs = ordered::array();
    std::vector<fs::path> files{outcome.dir / "results.csv", outcome.dir / "summary.json"};
    files.insert(files.end(), res.side_files.begin(), res.side_files.end());
    for (const fs::path& f : files)
        outputs.push_back(ordered{{"file", f.filename().string()},
                                  {"sha256", sha256_file(f)},
                                  {"bytes", fs::file_size(f)}});
    manifest["outputs"] = std::move(outputs);
    {
        std::ofstream man(outcome.dir / "manifest.json", std::ios::binary);
        man << manifest.dump(2) << '\n';
    }

    outcome.exit_code = outcome.partial ? 4 : res.exit_code;
    return outcome;
}

// --- reporting ---------------------------------------------------------------------

namespace {

// Column-aligned table print; numeric-looking cells are re-rendered short.
void print_table(std::ostream& out, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows,
                 const std::vector<std::size_t>& cols) {
    std::vector<std::vector<std::string>> cells;
    cells.push_back({});
    for (std::size_t c : cols) cells.back().push_back(c < header.size() ? header[c] : "");
    for (const auto& row : rows) {
        cells.push_back({});
        for (std::size_t c : cols) {
            std::string v = c < row.size() ? row[c] : "";
            char* end = nullptr;
            const double d = std::strtod(v.c_str(), &end);
            if (end && *end == '\0' && end != v.c_str() && v.find('/') == std::string::npos)
                v = fmt_short(d);
            cells.back().push_back(std::move(v));
        }
    }
    std::vector<std::size_t> width(cols.size(), 0);
    for (const auto& row : cells)
        for (std::size_t i = 0; i < row.size(); ++i)
            width[i] = std::max(width[i], row[i].size());
    for (std::size_t r = 0; r < cells.size(); ++r) {
        out << "  ";
        for (std::size_t i = 0; i < cells[r].size(); ++i) {
            out << cells[r][i];
            if (i + 1 < cells[r].size())
                out << std::string(width[i] - cells[r][i].size() + 2, ' ');
        }
        out << '\n';
        if (r == 0) {
            std::size_t total = 2;
            for (std::size_t i = 0; i < width.size(); ++i)
                total += width[i] + (i + 1 < width.size() ? 2 : 0);
            out << "  " << std::string(total - 2, '-') << '\n';
        }
    }
}

std::size_t col_of(const std::vector<std::string>& header, const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    return header.size();
}

void write_dat(const fs::path& p, const std::vector<std::pair<std::string, std::string>>& xy) {
    std::ofstream out(p, std::ios::binary);
    for (const auto& [x, y] : xy) out << x << ' ' << y << '\n';
}

}  // namespace

int render_report(const std::string& artifact_dir, std::ostream& out) {
    const fs::path dir(artifact_dir);
    ordered manifest;
    try {
        std::ifstream in(dir / "manifest.json", std::ios::binary);
        if (!in) {
            out << "report: missing manifest " << (dir / "manifest.json").string() << '\n';
            return 3;
        }
        manifest = ordered::parse(in);
    } catch (const std::exception& e) {
        out << "report: corrupt manifest: " << e.what() << '\n';
        return 3;
    }
    if (!manifest.is_object() || !manifest.contains("task") || !manifest["task"].is_string()) {
        out << "report: corrupt manifest: missing task field\n";
        return 3;
    }

    const std::string task = manifest["task"].get<std::string>();
    const bool partial = manifest.value("status", "complete") == std::string("partial");
    out << kToolName << " report: task=" << task;
    if (manifest.contains("seed")) out << " seed=" << manifest["seed"].dump();
    if (partial) out << "  [PARTIAL]";
    out << '\n';
    if (partial && manifest.contains("error"))
        out << "  error: " << manifest["error"].get<std::string>() << '\n';

    ordered summary;
    {
        std::ifstream in(dir / "summary.json", std::ios::binary);
        if (in) {
            try {
                summary = ordered::parse(in);
            } catch (const std::exception&) {
                summary = ordered::object();
            }
        }
    }

    auto csv = read_csv(dir / "results.csv");
    if (csv.empty()) {
        out << "  (no results)\n";
        return 0;
    }
    const std::vector<std::string> header = csv.front();
    const std::vector<std::vector<std::string>> rows(csv.begin() + 1, csv.end());

    if (task == "verify") {
        const std::string check = summary.value("check", "");
        out << "  check: " << check << "  model: " << summary.value("model", "") << '\n';
        if (summary.contains("header"))
            out << "  " << summary["header"].get<std::string>() << '\n';
        std::vector<std::string> shown = header;
        if (check == "dominance") {
            shown[col_of(header, "lhs")] = "p_hat";
            shown[col_of(header, "rhs")] = "upper";
        }
        print_table(out, shown,  rows,
                    {col_of(header, "inputs"), col_of(header, "lhs"), col_of(header, "rhs"),
                     col_of(header, "margin"), col_of(header, "se"), col_of(header, "note")});
        if (summary.contains("verdict"))
            out << "  verdict: " << summary["verdict"].get<std::string>() << '\n';
        std::vector<std::pair<std::string, std::string>> xy;
        const std::size_t ci = col_of(header, "row"), mi = col_of(header, "margin");
        for (const auto& row : rows) xy.emplace_back(row[ci], row[mi]);
        write_dat(dir / "margins.dat", xy);
        out << "  plot data: margins.dat\n";
    } else if (task == "law") {
        out << "  statistic: " << summary.value("statistic", "") << "  mode: "
            << summary.value("mode", "") << '\n';
        if (summary.contains("validators"))
            out << "  validators: "
                << (summary["validators"].value("pass", false) ? "PASS" : "FAIL")
                << " (heuristic)\n";
        print_table(out, header, rows,
                    {col_of(header, "eps"), col_of(header, "n"), col_of(header, "p_hat"),
                     col_of(header, "ci_lo"), col_of(header, "ci_hi")});
        const std::size_t ei = col_of(header, "eps"), ni = col_of(header, "n"),
                          pi = col_of(header, "p_hat");
        std::map<std::string, std::vector<std::pair<std::string, std::string>>> by_eps;
        std::vector<std::string> order;
        for (const auto& row : rows) {
            if (by_eps.find(row[ei]) == by_eps.end()) order.push_back(row[ei]);
            by_eps[row[ei]].emplace_back(row[ni], row[pi]);
        }
        for (const std::string& eps : order) {
            const std::string name = "trend_eps" + fmt_short(std::strtod(eps.c_str(), nullptr)) +
                                     ".dat";
            write_dat(dir / name, by_eps[eps]);
            out << "  plot data: " << name << '\n';
        }
    } else if (task == "expand") {
        out << "  scheme: " << summary.value("scheme", "") << "  x: "
            << summary.value("x", "") << '\n';
        print_table(out, header, rows,
                    {col_of(header, "k"), col_of(header, "digit"), col_of(header, "defect")});
        std::vector<std::pair<std::string, std::string>> xy;
        const std::size_t ki = col_of(header, "k"), di = col_of(header, "defect");
        for (const auto& row : rows) {
            Rational d(row[di]);
            d.canonicalize();
            xy.emplace_back(row[ki], fmt17(to_double(d)));
        }
        write_dat(dir / "defect.dat", xy);
        out << "  plot data: defect.dat\n";
    } else if (task == "sample") {
        out << "  trajectories: " << summary.value("trajectories", 0)
            << "  n_digits: " << summary.value("n_digits", 0) << '\n';
        // Mean log digit per step across trajectories: the growth profile.
        const std::size_t si = col_of(header, "step"), li = col_of(header, "log_digit");
        std::map<std::uint64_t, std::pair<double, std::size_t>> acc;
        for (const auto& row : rows) {
            const std::uint64_t step = std::strtoull(row[si].c_str(), nullptr, 10);
            acc[step].first += std::strtod(row[li].c_str(), nullptr);
            acc[step].second += 1;
        }
        std::vector<std::pair<std::string, std::string>> xy;
        for (const auto& [step, sum_count] : acc)
            xy.emplace_back(std::to_string(step),
                            fmt17(sum_count.first / static_cast<double>(sum_count.second)));
        write_dat(dir / "growth.dat", xy);
        const std::size_t preview = std::min<std::size_t>(rows.size(), 12);
        print_table(out, header,
                    std::vector<std::vector<std::string>>(rows.begin(), rows.begin() + preview),
                    {col_of(header, "trajectory"), col_of(header, "step"),
                     col_of(header, "log_digit"), col_of(header, "r")});
        if (rows.size() > preview)
            out << "  ... " << rows.size() - preview << " more rows in results.csv\n";
        out << "  plot data: growth.dat\n";
    }
    return 0;
}

}  // namespace opplab
