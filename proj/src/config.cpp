#include "opplab/config.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace opplab {

namespace {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

struct Ctx {
    std::vector<std::string> violations;

    void add(const std::string& path, const std::string& msg) {
        violations.push_back(path.empty() ? msg : path + ": " + msg);
    }
};

std::string sub(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

const char* type_word(const json& v) {
    switch (v.type()) {
        case json::value_t::null: return "null";
        case json::value_t::object: return "an object";
        case json::value_t::array: return "an array";
        case json::value_t::string: return "a string";
        case json::value_t::boolean: return "a boolean";
        case json::value_t::binary: return "binary";
        default: return "a number";
    }
}

// Strictness backbone: every object names its allowed keys; anything else is
// rejected by name.
void check_keys(Ctx& ctx, const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (const auto& item : obj.items()) {
        const std::string& key = item.key();
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) {
                return key == a;
            }) == allowed.end())
            ctx.add(path, "unknown key '" + key + "'");
    }
}

bool expect_object(Ctx& ctx, const json& v, const std::string& path) {
    if (v.is_object()) return true;
    ctx.add(path, std::string("expected an object, got ") + type_word(v));
    return false;
}

std::optional<double> get_num(Ctx& ctx, const json& obj, const std::string& path,
                              const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) return std::nullopt;
    if (!it->is_number()) {
        ctx.add(sub(path, key), std::string("expected a number, got ") + type_word(*it));
        return std::nullopt;
    }
    const double d = it->get<double>();
    if (!std::isfinite(d)) {
        ctx.add(sub(path, key), "must be finite");
        return std::nullopt;
    }
    return d;
}

std::optional<std::uint64_t> get_u64(Ctx& ctx, const json& obj, const std::string& path,
                                     const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) return std::nullopt;
    if (!it->is_number_unsigned()) {
        ctx.add(sub(path, key),
                std::string("expected a nonnegative integer, got ") + type_word(*it));
        return std::nullopt;
    }
    return it->get<std::uint64_t>();
}

std::optional<std::string> get_str(Ctx& ctx, const json& obj, const std::string& path,
                                   const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) return std::nullopt;
    if (!it->is_string()) {
        ctx.add(sub(path, key), std::string("expected a string, got ") + type_word(*it));
        return std::nullopt;
    }
    return it->get<std::string>();
}

std::optional<bool> get_bool(Ctx& ctx, const json& obj, const std::string& path,
                             const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) return std::nullopt;
    if (!it->is_boolean()) {
        ctx.add(sub(path, key), std::string("expected a boolean, got ") + type_word(*it));
        return std::nullopt;
    }
    return it->get<bool>();
}

// Rationals travel as exact "p/q" (or integer) strings.
std::optional<Rational> get_rational(Ctx& ctx, const json& obj, const std::string& path,
                                     const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) return std::nullopt;
    if (!it->is_string()) {
        ctx.add(sub(path, key),
                std::string("expected a rational string like \"2/5\", got ") + type_word(*it));
        return std::nullopt;
    }
    try {
        Rational r(it->get<std::string>());
        if (r.get_den() == 0) {
            ctx.add(sub(path, key), "zero denominator");
            return std::nullopt;
        }
        r.canonicalize();
        return r;
    } catch (const std::invalid_argument&) {
        ctx.add(sub(path, key), "not a rational: '" + it->get<std::string>() + "'");
        return std::nullopt;
    }
}

std::optional<std::vector<double>> get_num_array(Ctx& ctx, const json& obj,
                                                 const std::string& path, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) return std::nullopt;
    if (!it->is_array()) {
        ctx.add(sub(path, key), std::string("expected an array, got ") + type_word(*it));
        return std::nullopt;
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < it->size(); ++i) {
        const json& v = (*it)[i];
        if (!v.is_number() || !std::isfinite(v.get<double>())) {
            ctx.add(sub(path, key) + "[" + std::to_string(i) + "]", "expected a finite number");
            return std::nullopt;
        }
        out.push_back(v.get<double>());
    }
    return out;
}

std::optional<std::vector<std::uint64_t>> get_u64_array(Ctx& ctx, const json& obj,
                                                        const std::string& path,
                                                        const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) return std::nullopt;
    if (!it->is_array()) {
        ctx.add(sub(path, key), std::string("expected an array, got ") + type_word(*it));
        return std::nullopt;
    }
    std::vector<std::uint64_t> out;
    for (std::size_t i = 0; i < it->size(); ++i) {
        const json& v = (*it)[i];
        if (!v.is_number_unsigned()) {
            ctx.add(sub(path, key) + "[" + std::to_string(i) + "]",
                    "expected a nonnegative integer");
            return std::nullopt;
        }
        out.push_back(v.get<std::uint64_t>());
    }
    return out;
}

void require_increasing_grid(Ctx& ctx, const std::vector<std::uint64_t>& grid,
                             const std::string& path) {
    if (grid.empty()) {
        ctx.add(path, "must not be empty");
        return;
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] < 2) ctx.add(path, "grid points must be >= 2");
        if (i > 0 && grid[i] <= grid[i - 1]) {
            ctx.add(path, "must be strictly increasing");
            break;
        }
    }
}

std::string rat_str(const Rational& r) {
    return to_string(BigInt(r.get_num())) + "/" + to_string(BigInt(r.get_den()));
}

// --- name tables ---------------------------------------------------------------

LawId law_from_name(Ctx& ctx, const std::string& name, const std::string& path) {
    for (LawId id : {LawId::centered_p, LawId::raw_p, LawId::centered, LawId::triangular,
                     LawId::log_weighted})
        if (name == law_name(id)) return id;
    ctx.add(path, "unknown statistic '" + name +
                      "' (expected centered-p, raw-p, centered, triangular or log-weighted)");
    return LawId::raw_p;
}

const char* array_kind_name(ArrayKind k) {
    switch (k) {
        case ArrayKind::constant: return "constant";
        case ArrayKind::inv_n2: return "inv-n2";
        case ArrayKind::inv_n2_log2: return "inv-n2-log2";
    }
    return "constant";
}

ArrayKind array_kind_from_name(Ctx& ctx, const std::string& name, const std::string& path) {
    for (ArrayKind k : {ArrayKind::constant, ArrayKind::inv_n2, ArrayKind::inv_n2_log2})
        if (name == array_kind_name(k)) return k;
    ctx.add(path, "unknown array kind '" + name +
                      "' (expected constant, inv-n2 or inv-n2-log2)");
    return ArrayKind::constant;
}

const std::vector<std::string>& verify_check_names() {
    static const std::vector<std::string> names = {
        "dominance",     "truncated-moments", "tail-sum",
        "moment-bound",  "second-moment",     "cov-bound"};
    return names;
}

// --- section parsers -------------------------------------------------------------

DistributionFamily parse_family(Ctx& ctx, const json& v, const std::string& path) {
    DistributionFamily fallback = DistributionFamily::uniform();
    if (!expect_object(ctx, v, path)) return fallback;
    check_keys(ctx, v, path, {"kind", "alpha", "c0", "c1"});
    const auto kind = get_str(ctx, v, path, "kind");
    if (!kind) {
        ctx.add(path, "missing required key 'kind'");
        return fallback;
    }
    const auto alpha = get_num(ctx, v, path, "alpha");
    const auto c0 = get_num(ctx, v, path, "c0");
    const auto c1 = get_num(ctx, v, path, "c1");
    try {
        if (*kind == "uniform") {
            if (alpha || c0 || c1) ctx.add(path, "uniform takes no parameters");
            return DistributionFamily::uniform();
        }
        if (*kind == "power") {
            if (!alpha) {
                ctx.add(path, "power needs 'alpha'");
                return fallback;
            }
            if (c0 || c1) ctx.add(path, "power takes no c0/c1");
            return DistributionFamily::power(*alpha);
        }
        if (*kind == "perturbed-power") {
            if (!alpha || !c0 || !c1) {
                ctx.add(path, "perturbed-power needs 'alpha', 'c0' and 'c1'");
                return fallback;
            }
            return DistributionFamily::perturbed_power(*alpha, *c0, *c1);
        }
        ctx.add(sub(path, "kind"), "unknown family '" + *kind +
                                       "' (expected uniform, power or perturbed-power)");
    } catch (const std::invalid_argument& e) {
        ctx.add(path, e.what());
    }
    return fallback;
}

void parse_model(Ctx& ctx, const json& v, const std::string& path, ExperimentConfig& cfg) {
    if (!expect_object(ctx, v, path)) return;
    const auto preset = get_str(ctx, v, path, "preset");
    DistributionFamily fam = DistributionFamily::uniform();
    const bool has_family = v.contains("family");
    if (has_family) fam = parse_family(ctx, v["family"], sub(path, "family"));

    if (preset) {
        check_keys(ctx, v, path, {"preset", "family", "alpha", "L"});
        if (*preset == "luroth")
            cfg.model = ModelSpec::luroth(fam);
        else if (*preset == "engel")
            cfg.model = ModelSpec::engel(fam);
        else if (*preset == "sylvester")
            cfg.model = ModelSpec::sylvester(fam);
        else {
            ctx.add(sub(path, "preset"), "unknown preset '" + *preset +
                                             "' (expected luroth, engel or sylvester)");
            return;
        }
        cfg.model_preset = *preset;
    } else {
        check_keys(ctx, v, path,
                   {"name", "phi", "q", "family", "alpha", "L", "init_phi", "init_q"});
        ModelSpec m;
        m.name = get_str(ctx, v, path, "name").value_or("custom");
        m.families = {fam};
        m.alpha_meta = fam.alpha();
        m.l_meta = fam.limit_ratio();
        if (v.contains("phi")) {
            const json& pv = v["phi"];
            if (pv.is_string()) {
                const std::string s = pv.get<std::string>();
                if (s == "one")
                    m.phi.kind = PhiKind::one;
                else if (s == "identity")
                    m.phi.kind = PhiKind::identity;
                else if (s == "successor")
                    m.phi.kind = PhiKind::successor;
                else
                    ctx.add(sub(path, "phi"),
                            "unknown phi '" + s + "' (expected one, identity or successor)");
            } else if (pv.is_object()) {
                check_keys(ctx, pv, sub(path, "phi"), {"constant"});
                if (auto c = get_rational(ctx, pv, sub(path, "phi"), "constant")) {
                    if (*c <= 0)
                        ctx.add(sub(path, "phi") + ".constant", "must be positive");
                    m.phi.kind = PhiKind::constant;
                    m.phi.constant_value = *c;
                }
            } else {
                ctx.add(sub(path, "phi"), "expected a name or {\"constant\": \"p/q\"}");
            }
        }
        if (v.contains("q")) {
            const json& qv = v["q"];
            if (qv.is_string()) {
                if (qv.get<std::string>() == "inv-last-digit")
                    m.q.kind = QKind::inv_last_digit;
                else
                    ctx.add(sub(path, "q"), "unknown q '" + qv.get<std::string>() +
                                                "' (expected inv-last-digit)");
            } else if (qv.is_object()) {
                check_keys(ctx, qv, sub(path, "q"), {"constant"});
                if (auto c = get_rational(ctx, qv, sub(path, "q"), "constant")) {
                    if (*c < 0) ctx.add(sub(path, "q") + ".constant", "must be >= 0");
                    m.q.kind = QKind::constant;
                    m.q.constant_value = *c;
                }
            } else {
                ctx.add(sub(path, "q"), "expected a name or {\"constant\": \"p/q\"}");
            }
        }
        if (auto ip = get_rational(ctx, v, path, "init_phi")) {
            if (*ip <= 0) ctx.add(sub(path, "init_phi"), "must be positive");
            m.init_phi = *ip;
        }
        if (auto iq = get_rational(ctx, v, path, "init_q")) {
            if (*iq < 0) ctx.add(sub(path, "init_q"), "must be >= 0");
            m.init_q = *iq;
        }
        cfg.model = std::move(m);
        cfg.model_preset.clear();
    }

    if (auto a = get_num(ctx, v, path, "alpha")) {
        if (*a <= 0)
            ctx.add(sub(path, "alpha"), "must be > 0");
        else
            cfg.model.alpha_meta = *a;
    }
    if (auto l = get_num(ctx, v, path, "L")) {
        if (*l <= 0)
            ctx.add(sub(path, "L"), "must be > 0");
        else
            cfg.model.l_meta = *l;
    }
}

WeightScheme parse_weights(Ctx& ctx, const json& v, const std::string& path) {
    WeightScheme w;
    if (!expect_object(ctx, v, path)) return w;
    check_keys(ctx, v, path, {"u", "v", "s", "r", "j0", "p", "beta", "rho"});
    if (auto x = get_num(ctx, v, path, "u")) w.u = *x;
    if (auto x = get_num(ctx, v, path, "v")) w.v = *x;
    if (auto x = get_num(ctx, v, path, "s")) w.s = *x;
    if (auto x = get_num(ctx, v, path, "r")) w.r = *x;
    if (auto x = get_u64(ctx, v, path, "j0")) w.j0 = *x;
    if (auto x = get_num(ctx, v, path, "p")) w.p = *x;
    if (auto x = get_num(ctx, v, path, "beta")) w.beta = *x;
    if (v.contains("rho")) {
        const json& rv = v["rho"];
        const std::string rpath = sub(path, "rho");
        if (expect_object(ctx, rv, rpath)) {
            check_keys(ctx, rv, rpath, {"scale", "e", "g"});
            if (auto x = get_num(ctx, rv, rpath, "scale")) w.rho.scale = *x;
            if (auto x = get_num(ctx, rv, rpath, "e")) w.rho.e = *x;
            if (auto x = get_num(ctx, rv, rpath, "g")) w.rho.g = *x;
        }
    }
    try {
        w.validate();
    } catch (const std::invalid_argument& e) {
        ctx.add(path, e.what());
    }
    return w;
}

void parse_expand(Ctx& ctx, const json& v, const std::string& path, ExperimentConfig& cfg) {
    check_keys(ctx, v, path, {"x", "max_digits"});
    if (auto x = get_rational(ctx, v, path, "x")) {
        if (*x <= 0 || *x >= 1)
            ctx.add(sub(path, "x"), "x must lie in (0,1)");
        else
            cfg.expand_params.x = *x;
    } else if (!v.contains("x")) {
        ctx.add(path, "missing required key 'x'");
    }
    if (auto m = get_u64(ctx, v, path, "max_digits")) {
        if (*m < 1)
            ctx.add(sub(path, "max_digits"), "must be >= 1");
        else
            cfg.expand_params.max_digits = static_cast<std::size_t>(*m);
    }
    if (cfg.model_preset.empty())
        ctx.add(path, "expand needs a luroth, engel or sylvester preset model");
}

void parse_sample(Ctx& ctx, const json& v, const std::string& path, ExperimentConfig& cfg) {
    check_keys(ctx, v, path, {"trajectories", "n_digits"});
    if (auto t = get_u64(ctx, v, path, "trajectories")) {
        if (*t < 1)
            ctx.add(sub(path, "trajectories"), "must be >= 1");
        else
            cfg.sample_params.trajectories = static_cast<std::size_t>(*t);
    }
    if (auto n = get_u64(ctx, v, path, "n_digits")) {
        if (*n < 1)
            ctx.add(sub(path, "n_digits"), "must be >= 1");
        else
            cfg.sample_params.n_digits = static_cast<std::size_t>(*n);
    }
}

void parse_verify(Ctx& ctx, const json& v, const std::string& path, ExperimentConfig& cfg) {
    VerifyParams& p = cfg.verify_params;
    const auto check = get_str(ctx, v, path, "check");
    if (!check) {
        ctx.add(path, "missing required key 'check'");
        return;
    }
    const auto& names = verify_check_names();
    if (std::find(names.begin(), names.end(), *check) == names.end()) {
        std::string all;
        for (const auto& n : names) all += (all.empty() ? "" : ", ") + n;
        ctx.add(sub(path, "check"), "unknown check '" + *check + "' (expected " + all + ")");
        return;
    }
    p.check = *check;

    const auto grid_field = [&](const char* key, std::vector<std::uint64_t>& out,
                                bool required) {
        if (auto g = get_u64_array(ctx, v, path, key)) {
            require_increasing_grid(ctx, *g, sub(path, key));
            out = *g;
        } else if (required && !v.contains(key)) {
            ctx.add(path, std::string("missing required key '") + key + "'");
        }
    };

    if (*check == "dominance") {
        check_keys(ctx, v, path, {"check", "x_grid", "samples", "chain_step", "k_sigma"});
        if (auto g = get_num_array(ctx, v, path, "x_grid")) {
            if (g->empty()) ctx.add(sub(path, "x_grid"), "must not be empty");
            for (double x : *g)
                if (x < 1.0) ctx.add(sub(path, "x_grid"), "x values must be >= 1");
            p.x_grid = *g;
        } else if (!v.contains("x_grid")) {
            ctx.add(path, "missing required key 'x_grid'");
        }
    } else if (*check == "truncated-moments") {
        check_keys(ctx, v, path, {"check", "q_grid", "t_grid", "samples", "chain_step",
                                  "k_sigma"});
        if (auto g = get_num_array(ctx, v, path, "q_grid")) {
            if (g->empty()) ctx.add(sub(path, "q_grid"), "must not be empty");
            for (double q : *g)
                if (q <= 0.0) ctx.add(sub(path, "q_grid"), "q values must be > 0");
            p.q_grid = *g;
        } else if (!v.contains("q_grid")) {
            ctx.add(path, "missing required key 'q_grid'");
        }
        if (auto g = get_num_array(ctx, v, path, "t_grid")) {
            if (g->empty()) ctx.add(sub(path, "t_grid"), "must not be empty");
            for (double t : *g)
                if (t < 1.0) ctx.add(sub(path, "t_grid"), "t values must be >= 1");
            p.t_grid = *g;
        } else if (!v.contains("t_grid")) {
            ctx.add(path, "missing required key 't_grid'");
        }
    } else if (*check == "tail-sum") {
        check_keys(ctx, v, path,
                   {"check", "n_grid", "weights", "alpha", "trajectories", "k_sigma"});
        grid_field("n_grid", p.n_grid, true);
        if (auto a = get_num(ctx, v, path, "alpha")) {
            if (*a <= 0) ctx.add(sub(path, "alpha"), "must be > 0");
            p.alpha = *a;
        }
        if (auto t = get_u64(ctx, v, path, "trajectories")) p.trajectories = *t;
    } else if (*check == "moment-bound") {
        check_keys(ctx, v, path,
                   {"check", "n_grid", "weights", "p", "l_prime", "samples", "k_sigma"});
        grid_field("n_grid", p.n_grid, true);
        if (auto x = get_num(ctx, v, path, "p")) p.p = *x;
        if (auto l = get_num(ctx, v, path, "l_prime")) {
            if (*l <= 0) ctx.add(sub(path, "l_prime"), "must be > 0");
            p.l_prime = *l;
        } else if (!v.contains("l_prime")) {
            ctx.add(path, "missing required key 'l_prime'");
        }
    } else if (*check == "second-moment") {
        check_keys(ctx, v, path,
                   {"check", "n_grid", "weights", "alpha", "samples", "a_scale", "k_sigma"});
        grid_field("n_grid", p.n_grid, true);
        if (p.n_grid.size() == 1)
            ctx.add(sub(path, "n_grid"), "fit-then-freeze needs at least 2 grid points");
        if (auto a = get_num(ctx, v, path, "alpha")) {
            if (*a <= 0) ctx.add(sub(path, "alpha"), "must be > 0");
            p.alpha = *a;
        }
        if (auto a = get_num(ctx, v, path, "a_scale")) {
            if (*a < 0) ctx.add(sub(path, "a_scale"), "must be >= 0");
            p.a_scale = *a;
        }
    } else {  // cov-bound
        check_keys(ctx, v, path, {"check", "pairs", "samples", "p", "k_sigma"});
        auto it = v.find("pairs");
        if (it == v.end()) {
            ctx.add(path, "missing required key 'pairs'");
        } else if (!it->is_array() || it->empty()) {
            ctx.add(sub(path, "pairs"), "expected a nonempty array of [i, j] pairs");
        } else {
            for (std::size_t i = 0; i < it->size(); ++i) {
                const json& pr = (*it)[i];
                const std::string ppath = sub(path, "pairs") + "[" + std::to_string(i) + "]";
                if (!pr.is_array() || pr.size() != 2 || !pr[0].is_number_unsigned() ||
                    !pr[1].is_number_unsigned()) {
                    ctx.add(ppath, "expected [i, j] with nonnegative integers");
                    continue;
                }
                const std::uint64_t i0 = pr[0].get<std::uint64_t>();
                const std::uint64_t j0 = pr[1].get<std::uint64_t>();
                if (i0 < 1 || j0 < 1) ctx.add(ppath, "indices must be >= 1");
                p.pairs.emplace_back(i0, j0);
            }
        }
        if (auto x = get_num(ctx, v, path, "p")) {
            if (*x < 1) ctx.add(sub(path, "p"), "must be >= 1");
            p.p = *x;
        }
    }

    if (v.contains("weights")) p.weights = parse_weights(ctx, v["weights"], sub(path, "weights"));
    if (auto s = get_u64(ctx, v, path, "samples")) {
        if (*s < 2)
            ctx.add(sub(path, "samples"), "must be >= 2");
        else
            p.samples = *s;
    }
    if (auto c = get_u64(ctx, v, path, "chain_step")) {
        if (*c < 1)
            ctx.add(sub(path, "chain_step"), "must be >= 1");
        else
            p.chain_step = *c;
    }
    if (auto k = get_num(ctx, v, path, "k_sigma")) {
        if (*k <= 0) ctx.add(sub(path, "k_sigma"), "must be > 0");
        p.k_sigma = *k;
    }
}

void parse_law(Ctx& ctx, const json& v, const std::string& path, ExperimentConfig& cfg) {
    LawParams& p = cfg.law_params;
    check_keys(ctx, v, path,
               {"statistic", "weights", "array", "n_grid", "replications", "eps", "mode",
                "validate", "centering_trajectories"});
    const auto stat = get_str(ctx, v, path, "statistic");
    if (!stat) {
        ctx.add(path, "missing required key 'statistic'");
        return;
    }
    p.statistic = law_from_name(ctx, *stat, sub(path, "statistic"));

    if (auto g = get_u64_array(ctx, v, path, "n_grid")) {
        require_increasing_grid(ctx, *g, sub(path, "n_grid"));
        p.n_grid = *g;
    } else if (!v.contains("n_grid")) {
        ctx.add(path, "missing required key 'n_grid'");
    }

    if (v.contains("weights")) p.weights = parse_weights(ctx, v["weights"], sub(path, "weights"));

    if (v.contains("array")) {
        if (p.statistic != LawId::triangular)
            ctx.add(sub(path, "array"), "only applies to the triangular statistic");
        const json& av = v["array"];
        const std::string apath = sub(path, "array");
        if (expect_object(ctx, av, apath)) {
            check_keys(ctx, av, apath, {"kind", "scale", "m_factor"});
            if (auto k = get_str(ctx, av, apath, "kind"))
                p.array_kind = array_kind_from_name(ctx, *k, sub(apath, "kind"));
            else
                ctx.add(apath, "missing required key 'kind'");
            if (auto s = get_num(ctx, av, apath, "scale"))
                p.array_scale = *s;
            else
                ctx.add(apath, "missing required key 'scale'");
            if (auto m = get_num(ctx, av, apath, "m_factor")) {
                if (*m <= 0) ctx.add(sub(apath, "m_factor"), "must be > 0");
                p.m_factor = *m;
            }
            p.has_array = true;
        }
    } else if (p.statistic == LawId::triangular) {
        ctx.add(path, "the triangular statistic needs an 'array' section");
    }

    if (auto r = get_u64(ctx, v, path, "replications")) {
        if (*r < 2)
            ctx.add(sub(path, "replications"), "must be >= 2");
        else
            p.replications = static_cast<std::size_t>(*r);
    }
    if (auto e = get_num_array(ctx, v, path, "eps")) {
        if (e->empty()) ctx.add(sub(path, "eps"), "must not be empty");
        for (double x : *e)
            if (x <= 0) ctx.add(sub(path, "eps"), "levels must be > 0");
        p.eps = *e;
    }
    p.as_mode = p.statistic == LawId::log_weighted;
    if (auto m = get_str(ctx, v, path, "mode")) {
        if (*m == "prob")
            p.as_mode = false;
        else if (*m == "as")
            p.as_mode = true;
        else
            ctx.add(sub(path, "mode"), "unknown mode '" + *m + "' (expected prob or as)");
    }
    if (auto b = get_bool(ctx, v, path, "validate")) p.validate = *b;
    if (auto c = get_u64(ctx, v, path, "centering_trajectories")) {
        if (*c < 2)
            ctx.add(sub(path, "centering_trajectories"), "must be >= 2");
        else
            p.centering_trajectories = static_cast<std::size_t>(*c);
    }

    if (p.statistic == LawId::log_weighted) {
        if (p.weights.p < 2.0) ctx.add(sub(path, "weights") + ".p", "p must be >= 2");
        if (p.weights.beta <= 0.0) ctx.add(sub(path, "weights") + ".beta", "beta must be > 0");
    }
}

// --- resolved-config emitters ----------------------------------------------------

ordered emit_family(const DistributionFamily& f) {
    ordered out;
    switch (f.kind()) {
        case FamilyKind::uniform:
            out["kind"] = "uniform";
            break;
        case FamilyKind::power:
            out["kind"] = "power";
            out["alpha"] = f.alpha();
            break;
        case FamilyKind::perturbed_power:
            out["kind"] = "perturbed-power";
            out["alpha"] = f.alpha();
            out["c0"] = f.c0();
            out["c1"] = f.c1();
            break;
    }
    return out;
}

ordered emit_model(const ExperimentConfig& cfg) {
    ordered m;
    const ModelSpec& spec = cfg.model;
    if (!cfg.model_preset.empty()) {
        m["preset"] = cfg.model_preset;
    } else {
        m["name"] = spec.name;
        switch (spec.phi.kind) {
            case PhiKind::one: m["phi"] = "one"; break;
            case PhiKind::identity: m["phi"] = "identity"; break;
            case PhiKind::successor: m["phi"] = "successor"; break;
            default: m["phi"] = ordered{{"constant", rat_str(spec.phi.constant_value)}};
        }
        if (spec.q.kind == QKind::inv_last_digit)
            m["q"] = "inv-last-digit";
        else
            m["q"] = ordered{{"constant", rat_str(spec.q.constant_value)}};
        m["init_phi"] = rat_str(spec.init_phi);
        m["init_q"] = rat_str(spec.init_q);
    }
    m["family"] = emit_family(spec.family_at(0));
    m["alpha"] = spec.alpha_meta;
    if (spec.l_meta) m["L"] = *spec.l_meta;
    return m;
}

ordered emit_weights(const WeightScheme& w) {
    ordered out;
    out["u"] = w.u;
    out["v"] = w.v;
    out["s"] = w.s;
    out["r"] = w.r;
    out["j0"] = w.j0;
    out["p"] = w.p;
    out["beta"] = w.beta;
    out["rho"] = ordered{{"scale", w.rho.scale}, {"e", w.rho.e}, {"g", w.rho.g}};
    return out;
}

ordered emit_params(const ExperimentConfig& cfg) {
    ordered p;
    switch (cfg.task) {
        case TaskKind::expand:
            p["x"] = rat_str(cfg.expand_params.x);
            p["max_digits"] = cfg.expand_params.max_digits;
            break;
        case TaskKind::sample:
            p["trajectories"] = cfg.sample_params.trajectories;
            p["n_digits"] = cfg.sample_params.n_digits;
            break;
        case TaskKind::verify: {
            const VerifyParams& vp = cfg.verify_params;
            p["check"] = vp.check;
            if (!vp.x_grid.empty()) p["x_grid"] = vp.x_grid;
            if (!vp.q_grid.empty()) p["q_grid"] = vp.q_grid;
            if (!vp.t_grid.empty()) p["t_grid"] = vp.t_grid;
            if (!vp.n_grid.empty()) p["n_grid"] = vp.n_grid;
            if (!vp.pairs.empty()) {
                ordered pairs = ordered::array();
                for (const auto& [i, j] : vp.pairs) pairs.push_back({i, j});
                p["pairs"] = std::move(pairs);
            }
            if (vp.check == "tail-sum" || vp.check == "moment-bound" ||
                vp.check == "second-moment")
                p["weights"] = emit_weights(vp.weights);
            if (vp.check == "tail-sum" || vp.check == "second-moment")
                p["alpha"] = vp.alpha;
            if (vp.check == "moment-bound" || vp.check == "cov-bound") p["p"] = vp.p;
            if (vp.check == "moment-bound") p["l_prime"] = vp.l_prime;
            if (vp.check == "second-moment") p["a_scale"] = vp.a_scale;
            if (vp.check == "tail-sum")
                p["trajectories"] = vp.trajectories;
            else
                p["samples"] = vp.samples;
            if (vp.check == "dominance" || vp.check == "truncated-moments")
                p["chain_step"] = vp.chain_step;
            p["k_sigma"] = vp.k_sigma;
            break;
        }
        case TaskKind::law: {
            const LawParams& lp = cfg.law_params;
            p["statistic"] = law_name(lp.statistic);
            if (lp.has_array)
                p["array"] = ordered{{"kind", array_kind_name(lp.array_kind)},
                                     {"scale", lp.array_scale},
                                     {"m_factor", lp.m_factor}};
            else
                p["weights"] = emit_weights(lp.weights);
            p["n_grid"] = lp.n_grid;
            p["replications"] = lp.replications;
            p["eps"] = lp.eps;
            p["mode"] = lp.as_mode ? "as" : "prob";
            p["validate"] = lp.validate;
            p["centering_trajectories"] = lp.centering_trajectories;
            break;
        }
    }
    return p;
}

}  // namespace

const char* task_name(TaskKind k) {
    switch (k) {
        case TaskKind::expand: return "expand";
        case TaskKind::sample: return "sample";
        case TaskKind::verify: return "verify";
        case TaskKind::law: return "law";
    }
    return "sample";
}

TaskKind task_from_name(const std::string& name) {
    for (TaskKind k : {TaskKind::expand, TaskKind::sample, TaskKind::verify, TaskKind::law})
        if (name == task_name(k)) return k;
    throw std::invalid_argument("unknown task '" + name +
                                "' (expected expand, sample, verify or law)");
}

ExperimentConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigParseError(e.what());
    }

    Ctx ctx;
    ExperimentConfig cfg;
    if (!root.is_object())
        throw ConfigSchemaError({std::string("(root): expected an object, got ") +
                                 type_word(root)});

    check_keys(ctx, root, "", {"seed", "output_dir", "threads", "sampler", "model", "task"});

    if (auto s = get_u64(ctx, root, "", "seed")) cfg.seed = *s;
    if (auto d = get_str(ctx, root, "", "output_dir")) {
        if (d->empty())
            ctx.add("output_dir", "must not be empty");
        else
            cfg.output_dir = *d;
    }
    if (auto t = get_u64(ctx, root, "", "threads")) cfg.threads = static_cast<unsigned>(*t);

    if (root.contains("sampler")) {
        const json& sv = root["sampler"];
        if (expect_object(ctx, sv, "sampler")) {
            check_keys(ctx, sv, "sampler", {"mode", "v_bits"});
            if (auto m = get_str(ctx, sv, "sampler", "mode")) {
                if (*m == "fast")
                    cfg.sampler.mode = SampleMode::fast;
                else if (*m == "exact")
                    cfg.sampler.mode = SampleMode::exact;
                else
                    ctx.add("sampler.mode", "unknown mode '" + *m + "' (expected fast or exact)");
            }
            if (auto b = get_u64(ctx, sv, "sampler", "v_bits")) {
                if (*b < 1 || *b > 128)
                    ctx.add("sampler.v_bits", "must lie in 1..128");
                else
                    cfg.sampler.v_bits = static_cast<unsigned>(*b);
            }
        }
    }

    if (root.contains("model"))
        parse_model(ctx, root["model"], "model", cfg);
    else {
        cfg.model = ModelSpec::luroth();
        cfg.model_preset = "luroth";
    }

    if (!root.contains("task")) {
        ctx.add("", "missing required key 'task'");
    } else if (expect_object(ctx, root["task"], "task")) {
        const json& tv = root["task"];
        check_keys(ctx, tv, "task", {"kind", "params"});
        const auto kind = get_str(ctx, tv, "task", "kind");
        if (!kind) {
            ctx.add("task", "missing required key 'kind'");
        } else {
            try {
                cfg.task = task_from_name(*kind);
                const json params = tv.contains("params") ? tv["params"] : json::object();
                if (expect_object(ctx, params, "task.params")) {
                    switch (cfg.task) {
                        case TaskKind::expand:
                            parse_expand(ctx, params, "task.params", cfg);
                            break;
                        case TaskKind::sample:
                            parse_sample(ctx, params, "task.params", cfg);
                            break;
                        case TaskKind::verify:
                            parse_verify(ctx, params, "task.params", cfg);
                            break;
                        case TaskKind::law:
                            parse_law(ctx, params, "task.params", cfg);
                            break;
                    }
                }
            } catch (const std::invalid_argument& e) {
                ctx.add("task.kind", e.what());
            }
        }
    }

    if (!ctx.violations.empty()) throw ConfigSchemaError(std::move(ctx.violations));

    refresh_resolved(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigParseError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

void refresh_resolved(ExperimentConfig& cfg) {
    ordered out;
    out["seed"] = cfg.seed;
    out["output_dir"] = cfg.output_dir;
    out["threads"] = cfg.threads;
    out["sampler"] = ordered{{"mode", cfg.sampler.mode == SampleMode::exact ? "exact" : "fast"},
                             {"v_bits", cfg.sampler.v_bits}};
    out["model"] = emit_model(cfg);
    out["task"] = ordered{{"kind", task_name(cfg.task)}, {"params", emit_params(cfg)}};
    cfg.resolved = out.dump(2) + "\n";
}

}  // namespace opplab
