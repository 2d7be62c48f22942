#include "dopinv/cli/commands.hpp"

#include <cmath>
#include <ostream>
#include <random>

#include "dopinv/elliptic.hpp"
#include "dopinv/io.hpp"

namespace dopinv::cli {

namespace {

inverse::LevelSetState make_state(const RunConfig& cfg, ScalarField phi)
{
    return inverse::LevelSetState{std::move(phi), cfg.resolved_gamma_p(), cfg.resolved_gamma_n(), cfg.eps_smooth};
}

}  // namespace

ScalarField phantom_phi(const RunConfig& cfg, const Grid& grid)
{
    if (cfg.phantom.kind == PhantomKind::Uniform) {
        return ScalarField(grid, cfg.phantom.uniform_value >= 0.0 ? 1.0 : -1.0);
    }
    return level_set::init_phi(grid, cfg.phantom.shape);
}

forward::DopingField phantom_doping(const RunConfig& cfg, const Grid& grid)
{
    if (cfg.phantom.kind == PhantomKind::Uniform) {
        return forward::DopingField(ScalarField(grid, cfg.phantom.uniform_value), cfg.c_min, cfg.c_max);
    }
    const ScalarField phi = phantom_phi(cfg, grid);
    ScalarField c(grid);
    for (std::size_t k = 0; k < c.size(); ++k) c[k] = phi[k] >= 0.0 ? cfg.c_max : cfg.c_min;
    return forward::DopingField(std::move(c), cfg.c_min, cfg.c_max);
}

std::vector<forward::VoltageProfile> voltage_profiles(const RunConfig& cfg, const Grid& grid)
{
    std::vector<forward::VoltageProfile> out;
    for (const auto& p : cfg.profiles) out.push_back(forward::contact_voltage(p.center, p.half_width, p.amplitude, grid));
    return out;
}

forward::MeasurementSet inversion_data(const RunConfig& cfg, const Grid& grid)
{
    if (cfg.data_dir) {
        if (!std::filesystem::exists(*cfg.data_dir / "manifest.txt")) {
            throw io::FormatError("measurement manifest not found: '" + (*cfg.data_dir / "manifest.txt").string() + "'");
        }
        auto set = forward::load_measurement_set(*cfg.data_dir, grid);
        if (set.kind != cfg.kind) {
            throw ConfigError("config key 'kind': " + forward::kind_name(cfg.kind) + " does not match data kind " +
                              forward::kind_name(set.kind));
        }
        return set;
    }
    const auto profiles = voltage_profiles(cfg, grid);
    if (cfg.synth_model == SynthModel::Equilibrium) {
        return forward::synthesize_data(phantom_doping(cfg, grid), profiles, cfg.kind, cfg.lambda_sq,
                                        cfg.mobilities(), cfg.noise_level, cfg.seed);
    }
    const auto gamma = inverse::gamma_from_phi(make_state(cfg, phantom_phi(cfg, grid)));
    return forward::synthesize_from_gamma(gamma, profiles, cfg.kind, cfg.mobilities(), cfg.noise_level, cfg.seed);
}

int cmd_phantom(const RunConfig& cfg, std::ostream& out)
{
    const Grid grid(cfg.grid_n);
    const auto doping = phantom_doping(cfg, grid);
    const auto gamma = forward::equilibrium_gamma(doping, cfg.lambda_sq);
    const auto indicator = indicator_nonnegative(phantom_phi(cfg, grid));

    io::save_field(cfg.out_dir / "doping.txt", doping.values());
    io::save_field(cfg.out_dir / "gamma.txt", gamma.values());
    io::save_field(cfg.out_dir / "indicator.txt", indicator);

    double n_cells = 0.0;
    for (double v : indicator.values()) n_cells += v;
    out << "phantom " << cfg.phantom.text << ": " << n_cells << " N-region cells of " << grid.cell_count()
        << ", written to " << cfg.out_dir.string() << '\n';
    return kExitOk;
}

int cmd_forward(const RunConfig& cfg, std::ostream& out)
{
    const Grid grid(cfg.grid_n);
    const auto set = forward::synthesize_data(phantom_doping(cfg, grid), voltage_profiles(cfg, grid), cfg.kind,
                                              cfg.lambda_sq, cfg.mobilities(), cfg.noise_level, cfg.seed);
    const auto dir = cfg.out_dir / "data";
    forward::save_measurement_set(dir, set);
    if (cfg.kind == forward::MeasurementKind::CurrentFlow) {
        for (std::size_t j = 0; j < set.entries.size(); ++j) {
            out << "current_flow " << j << ' ' << io::format_double(set.entries[j].clean.scalar()) << ' '
                << io::format_double(set.entries[j].data.scalar()) << '\n';
        }
    }
    out << set.entries.size() << ' ' << forward::kind_name(cfg.kind) << " measurement(s) written to "
        << dir.string() << '\n';
    return kExitOk;
}

int cmd_invert(const RunConfig& cfg, std::ostream& out)
{
    const Grid grid(cfg.grid_n);
    const auto data = inversion_data(cfg, grid);
    const auto truth = indicator_nonnegative(phantom_phi(cfg, grid));
    const auto init = make_state(cfg, level_set::init_phi(grid, cfg.init));

    const auto result = inverse::reconstruct(data, cfg.mobilities(), cfg.inversion, init, truth);

    io::write_text_file(cfg.out_dir / "convergence.csv", inverse::convergence_csv(result));
    io::save_field(cfg.out_dir / "phi.txt", result.final_state.phi);
    io::save_field(cfg.out_dir / "gamma.txt", inverse::gamma_from_phi(result.final_state).values());
    io::save_field(cfg.out_dir / "indicator.txt", indicator_nonnegative(result.final_state.phi));

    const auto& first = result.records.front();
    const auto& last = result.records.back();
    out << "stop " << inverse::stop_reason_name(result.stop_reason) << " after " << result.iterations
        << " iterations\n"
        << "residual " << io::format_double(first.residual) << " -> " << io::format_double(last.residual) << '\n'
        << "symdiff " << io::format_double(*first.symdiff_error) << " -> " << io::format_double(*last.symdiff_error)
        << '\n';
    return result.converged() ? kExitOk : kExitNotConverged;
}

int cmd_gradcheck(const RunConfig& cfg, std::ostream& out)
{
    if (cfg.grid_n > kGradcheckMaxGrid) {
        throw ConfigError("config key 'grid_n': gradcheck needs grid_n <= " + std::to_string(kGradcheckMaxGrid) +
                          ", got " + std::to_string(cfg.grid_n));
    }
    const Grid grid(cfg.grid_n);
    std::mt19937_64 rng(cfg.seed);
    // Spread phi over the smoothing band so most cells carry sensitivity.
    const double spread = 1.5 * cfg.eps_smooth * grid.h();
    std::uniform_real_distribution<double> dist(-spread, spread);
    auto random_phi = [&] {
        ScalarField phi(grid);
        for (double& v : phi.values()) v = dist(rng);
        return phi;
    };

    const auto state = make_state(cfg, random_phi());
    const ScalarField data_phi = cfg.gradcheck_mode == GradcheckMode::Self ? state.phi : random_phi();
    const auto data = forward::synthesize_from_gamma(inverse::gamma_from_phi(make_state(cfg, data_phi)),
                                                     voltage_profiles(cfg, grid), cfg.kind, cfg.mobilities(), 0.0,
                                                     cfg.seed);

    const auto adj = inverse::gradient_adjoint(state, data, cfg.mobilities());
    const auto fd = inverse::gradient_fd(state, data, cfg.mobilities(), kGradcheckFdStep);
    double diff = 0.0, na = 0.0, nf = 0.0;
    for (std::size_t k = 0; k < adj.size(); ++k) {
        diff += (adj[k] - fd[k]) * (adj[k] - fd[k]);
        na += adj[k] * adj[k];
        nf += fd[k] * fd[k];
    }
    diff = std::sqrt(diff);
    na = std::sqrt(na);
    nf = std::sqrt(nf);
    const bool degenerate = na < 1e-12 && nf < 1e-12;
    const double rel = degenerate ? 0.0 : diff / nf;
    const bool pass = degenerate || rel <= kGradcheckTolerance;
    out << "adjoint_norm " << io::format_double(na) << '\n'
        << "fd_norm " << io::format_double(nf) << '\n'
        << "rel_error " << io::format_double(rel) << '\n'
        << (pass ? "PASS" : "FAIL") << '\n';
    return pass ? kExitOk : kExitGradcheck;
}

int run_command(const std::string& command, const std::filesystem::path& config_path,
                const std::optional<std::filesystem::path>& out_override, std::ostream& out, std::ostream& err)
{
    try {
        RunConfig cfg = load_config(config_path);
        if (out_override) cfg.out_dir = *out_override;
        if (command == "phantom") return cmd_phantom(cfg, out);
        if (command == "forward") return cmd_forward(cfg, out);
        if (command == "invert") return cmd_invert(cfg, out);
        if (command == "gradcheck") return cmd_gradcheck(cfg, out);
        err << "error: unknown command '" << command << "'\n";
        return kExitConfig;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const io::FormatError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const elliptic::SolverError& e) {
        err << "solver failure: " << e.what() << '\n';
        return kExitSolver;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }
}

}  // namespace dopinv::cli
