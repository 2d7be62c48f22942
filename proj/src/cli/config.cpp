#include "dopinv/cli/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "dopinv/device.hpp"
#include "dopinv/io.hpp"

namespace dopinv::cli {

namespace {

std::vector<std::string> words(const std::string& s)
{
    std::istringstream is(s);
    std::vector<std::string> out;
    std::string w;
    while (is >> w) out.push_back(w);
    return out;
}

double number(const std::string& key, const std::string& token)
{
    try {
        const double v = io::parse_double(token);
        if (!std::isfinite(v)) throw io::FormatError("non-finite");
        return v;
    } catch (const io::FormatError&) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + token + "'");
    }
}

long long integer(const std::string& key, const std::string& token)
{
    try {
        return io::parse_integer(token);
    } catch (const io::FormatError&) {
        throw ConfigError("config key '" + key + "': expected an integer, got '" + token + "'");
    }
}

void require(bool ok, const std::string& key, const std::string& what)
{
    if (!ok) throw ConfigError("config key '" + key + "': " + what);
}

}  // namespace

double RunConfig::resolved_gamma_p() const
{
    return gamma_p.value_or(std::exp(device::built_in_potential(c_min)));
}

double RunConfig::resolved_gamma_n() const
{
    return gamma_n.value_or(std::exp(device::built_in_potential(c_max)));
}

level_set::Shape parse_shape(const std::string& text)
{
    const auto w = words(text);
    if (w.empty()) throw std::invalid_argument("empty shape");
    auto num = [&](std::size_t k) { return io::parse_double(w.at(k)); };
    level_set::Shape shape;
    if (w[0] == "circle" && w.size() == 4) {
        shape = level_set::Circle{num(1), num(2), num(3)};
    } else if (w[0] == "halfplane" && w.size() == 3 && (w[1] == "x" || w[1] == "y")) {
        shape = level_set::HalfPlane{w[1][0], num(2)};
    } else if (w[0] == "lshape" && w.size() == 1) {
        shape = level_set::l_shape();
    } else {
        throw std::invalid_argument("expected 'circle cx cy r', 'halfplane <x|y> offset' or 'lshape', got '" +
                                    text + "'");
    }
    // Degenerate parameters surface here rather than at first use.
    (void)level_set::init_phi(Grid(Grid::kMinCells), shape);
    return shape;
}

RunConfig parse_config(std::istream& is)
{
    std::vector<io::KeyValue> items;
    try {
        items = io::parse_key_values(is);
    } catch (const io::FormatError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    RunConfig cfg;
    bool have_grid = false;
    std::set<std::string> seen;

    using Setter = std::function<void(const std::string&, const std::string&)>;
    const std::map<std::string, Setter> setters = {
        {"grid_n", [&](const std::string& k, const std::string& v) {
             const long long n = integer(k, v);
             require(n >= Grid::kMinCells && n <= 4096, k, "must lie in [4, 4096]");
             cfg.grid_n = static_cast<int>(n);
             have_grid = true;
         }},
        {"lambda_sq", [&](const std::string& k, const std::string& v) {
             cfg.lambda_sq = number(k, v);
             require(cfg.lambda_sq > 0.0, k, "must be positive");
         }},
        {"mu_n", [&](const std::string& k, const std::string& v) {
             cfg.mu_n = number(k, v);
             require(cfg.mu_n > 0.0, k, "must be positive");
         }},
        {"mu_p", [&](const std::string& k, const std::string& v) {
             cfg.mu_p = number(k, v);
             require(cfg.mu_p > 0.0, k, "must be positive");
         }},
        {"c_min", [&](const std::string& k, const std::string& v) { cfg.c_min = number(k, v); }},
        {"c_max", [&](const std::string& k, const std::string& v) { cfg.c_max = number(k, v); }},
        {"phantom", [&](const std::string& k, const std::string& v) {
             const auto w = words(v);
             PhantomSpec spec;
             spec.text = v;
             if (!w.empty() && w[0] == "uniform") {
                 require(w.size() == 2, k, "expected 'uniform <C>'");
                 spec.kind = PhantomKind::Uniform;
                 spec.uniform_value = number(k, w[1]);
             } else {
                 try {
                     spec.shape = parse_shape(v);
                 } catch (const std::exception& e) {
                     throw ConfigError("config key '" + k + "': " + e.what());
                 }
             }
             cfg.phantom = spec;
         }},
        {"profile", [&](const std::string& k, const std::string& v) {
             const auto w = words(v);
             require(w.size() == 3, k, "expected '<center> <half_width> <amplitude>'");
             ProfileSpec p{number(k, w[0]), number(k, w[1]), number(k, w[2])};
             require(p.half_width > 0.0, k, "half_width must be positive");
             cfg.profiles.push_back(p);
         }},
        {"kind", [&](const std::string& k, const std::string& v) {
             try {
                 cfg.kind = forward::parse_kind(v);
             } catch (const std::invalid_argument& e) {
                 throw ConfigError("config key '" + k + "': " + e.what());
             }
         }},
        {"noise_level", [&](const std::string& k, const std::string& v) {
             cfg.noise_level = number(k, v);
             require(cfg.noise_level >= 0.0, k, "must be non-negative");
         }},
        {"seed", [&](const std::string& k, const std::string& v) {
             const long long s = integer(k, v);
             require(s >= 0, k, "must be non-negative");
             cfg.seed = static_cast<std::uint64_t>(s);
         }},
        {"synth_model", [&](const std::string& k, const std::string& v) {
             if (v == "levelset") cfg.synth_model = SynthModel::LevelSet;
             else if (v == "equilibrium") cfg.synth_model = SynthModel::Equilibrium;
             else throw ConfigError("config key '" + k + "': expected levelset or equilibrium, got '" + v + "'");
         }},
        {"data_dir", [&](const std::string& k, const std::string& v) {
             require(!v.empty(), k, "must not be empty");
             cfg.data_dir = std::filesystem::path(v);
         }},
        {"beta", [&](const std::string& k, const std::string& v) {
             cfg.inversion.step_size = number(k, v);
             require(cfg.inversion.step_size >= 0.0, k, "must be non-negative");
         }},
        {"max_iters", [&](const std::string& k, const std::string& v) {
             const long long m = integer(k, v);
             require(m >= 1 && m <= 1000000, k, "must lie in [1, 1000000]");
             cfg.inversion.max_iters = static_cast<int>(m);
         }},
        {"tau", [&](const std::string& k, const std::string& v) {
             cfg.inversion.discrepancy_tau = number(k, v);
             require(cfg.inversion.discrepancy_tau >= 1.0, k, "must be >= 1");
         }},
        {"grad_tol", [&](const std::string& k, const std::string& v) {
             cfg.inversion.grad_tol = number(k, v);
             require(cfg.inversion.grad_tol >= 0.0, k, "must be non-negative");
         }},
        {"record_every", [&](const std::string& k, const std::string& v) {
             const long long r = integer(k, v);
             require(r >= 1 && r <= 1000000, k, "must lie in [1, 1000000]");
             cfg.inversion.record_every = static_cast<int>(r);
         }},
        {"reinit_every", [&](const std::string& k, const std::string& v) {
             const long long r = integer(k, v);
             require(r >= 0 && r <= 1000000, k, "must lie in [0, 1000000]");
             cfg.inversion.reinit_every = static_cast<int>(r);
         }},
        {"eps_smooth", [&](const std::string& k, const std::string& v) {
             cfg.eps_smooth = number(k, v);
             require(cfg.eps_smooth > 0.0, k, "must be positive");
         }},
        {"gamma_p", [&](const std::string& k, const std::string& v) {
             cfg.gamma_p = number(k, v);
             require(*cfg.gamma_p > 0.0, k, "must be positive");
         }},
        {"gamma_n", [&](const std::string& k, const std::string& v) {
             cfg.gamma_n = number(k, v);
             require(*cfg.gamma_n > 0.0, k, "must be positive");
         }},
        {"init", [&](const std::string& k, const std::string& v) {
             try {
                 cfg.init = parse_shape(v);
             } catch (const std::exception& e) {
                 throw ConfigError("config key '" + k + "': " + e.what());
             }
         }},
        {"gradcheck_mode", [&](const std::string& k, const std::string& v) {
             if (v == "random") cfg.gradcheck_mode = GradcheckMode::Random;
             else if (v == "self") cfg.gradcheck_mode = GradcheckMode::Self;
             else throw ConfigError("config key '" + k + "': expected random or self, got '" + v + "'");
         }},
        {"out", [&](const std::string& k, const std::string& v) {
             require(!v.empty(), k, "must not be empty");
             cfg.out_dir = std::filesystem::path(v);
         }},
    };

    for (const auto& item : items) {
        const auto it = setters.find(item.key);
        if (it == setters.end()) {
            throw ConfigError("config key '" + item.key + "': unknown key (line " + std::to_string(item.line) + ")");
        }
        if (item.key != "profile" && !seen.insert(item.key).second) {
            throw ConfigError("config key '" + item.key + "': given more than once");
        }
        it->second(item.key, item.value);
    }

    if (!have_grid) throw ConfigError("config key 'grid_n': required key missing");
    require(cfg.c_min < cfg.c_max, "c_max", "must exceed c_min");
    if (cfg.phantom.kind == PhantomKind::Uniform) {
        require(cfg.phantom.uniform_value >= cfg.c_min && cfg.phantom.uniform_value <= cfg.c_max, "phantom",
                "uniform doping must lie in [c_min, c_max]");
    }
    require(cfg.resolved_gamma_p() < cfg.resolved_gamma_n(), "gamma_n", "must exceed gamma_p");
    if (cfg.profiles.empty()) cfg.profiles.push_back(ProfileSpec{});
    for (const auto& p : cfg.profiles) {
        const Grid g(cfg.grid_n);
        bool any = false;
        for (int k = 0; k < g.n(); ++k) any |= std::abs(g.face_coordinate(k) - p.center) <= p.half_width;
        require(any, "profile", "contact covers no boundary face at grid_n = " + std::to_string(cfg.grid_n));
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    return parse_config(in);
}

}  // namespace dopinv::cli
