#include "dopinv/forward.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#include "dopinv/elliptic.hpp"
#include "dopinv/io.hpp"

namespace dopinv::forward {

DopingField::DopingField(ScalarField values, double c_min, double c_max)
    : values_(std::move(values)), c_min_(c_min), c_max_(c_max)
{
    if (!(c_min < c_max)) throw std::invalid_argument("doping bounds need c_min < c_max");
    if (!values_.all_finite()) throw std::invalid_argument("doping field must be finite");
    for (double v : values_.values()) {
        if (v < c_min || v > c_max) {
            throw std::invalid_argument("doping value " + io::format_double(v) + " outside [" +
                                        io::format_double(c_min) + ", " + io::format_double(c_max) + "]");
        }
    }
}

GammaField::GammaField(ScalarField values) : values_(std::move(values))
{
    for (double v : values_.values()) {
        if (!(v > 0.0) || !std::isfinite(v) || !std::isfinite(std::log(v))) {
            throw std::invalid_argument("gamma must be positive with finite logarithm");
        }
    }
}

ScalarField GammaField::reciprocal() const
{
    ScalarField out(grid());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = 1.0 / values_[k];
    return out;
}

ScalarField GammaField::log() const
{
    ScalarField out(grid());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::log(values_[k]);
    return out;
}

VoltageProfile::VoltageProfile(Trace values) : values_(std::move(values))
{
    if (values_.segment() != Segment::Bottom) {
        throw std::invalid_argument("voltage profiles live on the bottom contact");
    }
}

VoltageProfile VoltageProfile::scaled(double factor) const
{
    Trace t = values_;
    for (double& v : t.values()) v *= factor;
    return VoltageProfile(std::move(t));
}

std::string kind_name(MeasurementKind kind)
{
    return kind == MeasurementKind::PointwiseTrace ? "pointwise" : "current-flow";
}

MeasurementKind parse_kind(const std::string& name)
{
    if (name == "pointwise") return MeasurementKind::PointwiseTrace;
    if (name == "current-flow") return MeasurementKind::CurrentFlow;
    throw std::invalid_argument("unknown measurement kind '" + name + "' (expected pointwise or current-flow)");
}

Measurement::Measurement(MeasurementKind kind, std::optional<Trace> trace, std::optional<double> scalar)
    : kind_(kind), pointwise_(std::move(trace)), scalar_(scalar)
{
}

Measurement Measurement::pointwise(Trace trace)
{
    if (trace.segment() != Segment::Top) {
        throw std::invalid_argument("pointwise measurements live on the top contact");
    }
    return Measurement(MeasurementKind::PointwiseTrace, std::move(trace), std::nullopt);
}

Measurement Measurement::current_flow(double value)
{
    return Measurement(MeasurementKind::CurrentFlow, std::nullopt, value);
}

const Trace& Measurement::trace() const
{
    if (!pointwise_) throw std::logic_error("current-flow measurement has no trace");
    return *pointwise_;
}

double Measurement::scalar() const
{
    if (!scalar_) throw std::logic_error("pointwise measurement has no scalar value");
    return *scalar_;
}

double Measurement::magnitude() const
{
    return pointwise_ ? pointwise_->max_abs() : std::abs(*scalar_);
}

void MeasurementSet::validate() const
{
    if (entries.empty()) throw std::invalid_argument("measurement set is empty");
    if (!(noise_level >= 0.0)) throw std::invalid_argument("noise level must be non-negative");
    for (const auto& e : entries) {
        if (e.data.kind() != kind || e.clean.kind() != kind) {
            throw std::invalid_argument("measurement set mixes kinds");
        }
    }
}

double MeasurementSet::data_noise_norm() const
{
    // The L2(top) norm of n i.i.d. face perturbations with h n = 1 has
    // expected square sigma^2, same as a scalar perturbation.
    double sum = 0.0;
    for (const auto& e : entries) {
        const double sigma = noise_level * e.clean.magnitude();
        sum += sigma * sigma;
    }
    return std::sqrt(sum);
}

GammaField equilibrium_gamma(const DopingField& doping, double lambda_sq)
{
    ScalarField v = elliptic::newton_equilibrium(doping.values(), lambda_sq);
    for (double& x : v.values()) x = std::exp(x);
    return GammaField(std::move(v));
}

std::pair<ScalarField, ScalarField> solve_continuity(const GammaField& gamma, const VoltageProfile& voltage,
                                                     const Mobilities& mob)
{
    const Grid& g = gamma.grid();
    if (!(voltage.grid() == g)) throw std::invalid_argument("voltage profile and gamma grids differ");
    if (!(mob.mu_n > 0.0) || !(mob.mu_p > 0.0)) throw std::invalid_argument("mobilities must be positive");

    ScalarField a_n = gamma.values();
    for (double& x : a_n.values()) x *= mob.mu_n;
    ScalarField a_p = gamma.reciprocal();
    for (double& x : a_p.values()) x *= mob.mu_p;

    const Trace zero_top(g, Segment::Top);
    const elliptic::EllipticProblem pu{a_n, voltage.scaled(-1.0).values(), zero_top, ScalarField(g)};
    const elliptic::EllipticProblem pv{a_p, voltage.values(), zero_top, ScalarField(g)};
    return {elliptic::solve_spd(elliptic::assemble(pu)), elliptic::solve_spd(elliptic::assemble(pv))};
}

Trace dn_pointwise(const GammaField& gamma, const VoltageProfile& voltage, const Mobilities& mob)
{
    const auto [u, v] = solve_continuity(gamma, voltage, mob);
    ScalarField a_n = gamma.values();
    for (double& x : a_n.values()) x *= mob.mu_n;
    ScalarField a_p = gamma.reciprocal();
    for (double& x : a_p.values()) x *= mob.mu_p;

    Trace out = elliptic::flux_gamma1(u, a_n);
    const Trace vf = elliptic::flux_gamma1(v, a_p);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] -= vf[k];
    return out;
}

double dn_current_flow(const GammaField& gamma, const VoltageProfile& voltage, const Mobilities& mob)
{
    return integrate_trace(dn_pointwise(gamma, voltage, mob));
}

Measurement measure(const GammaField& gamma, const VoltageProfile& voltage, const Mobilities& mob,
                    MeasurementKind kind)
{
    Trace t = dn_pointwise(gamma, voltage, mob);
    if (kind == MeasurementKind::CurrentFlow) return Measurement::current_flow(integrate_trace(t));
    return Measurement::pointwise(std::move(t));
}

DopingRecovery doping_from_gamma(const GammaField& gamma, double lambda_sq, double c_min, double c_max)
{
    if (!(c_min < c_max)) throw std::invalid_argument("doping bounds need c_min < c_max");
    const ScalarField lap = field_laplacian(gamma.log());
    ScalarField raw(gamma.grid());
    ScalarField clamped(gamma.grid());
    std::size_t outside = 0;
    for (std::size_t k = 0; k < raw.size(); ++k) {
        const double gk = gamma.values()[k];
        raw[k] = gk - 1.0 / gk - lambda_sq * lap[k];
        clamped[k] = std::clamp(raw[k], c_min, c_max);
        if (clamped[k] != raw[k]) ++outside;
    }
    return DopingRecovery{DopingField(std::move(clamped), c_min, c_max), outside, std::move(raw)};
}

VoltageProfile contact_voltage(double center, double half_width, double amplitude, const Grid& grid)
{
    if (!(half_width > 0.0)) throw std::invalid_argument("contact half-width must be positive");
    Trace t(grid, Segment::Bottom);
    int selected = 0;
    for (int k = 0; k < grid.n(); ++k) {
        if (std::abs(grid.face_coordinate(k) - center) <= half_width) {
            t[k] = amplitude;
            ++selected;
        }
    }
    if (selected == 0) {
        throw std::invalid_argument("contact at " + io::format_double(center) + " with half-width " +
                                    io::format_double(half_width) + " covers no boundary face");
    }
    return VoltageProfile(std::move(t));
}

MeasurementSet synthesize_from_gamma(const GammaField& gamma, const std::vector<VoltageProfile>& profiles,
                                     MeasurementKind kind, const Mobilities& mob, double noise_level,
                                     std::uint64_t seed)
{
    if (!(noise_level >= 0.0)) throw std::invalid_argument("noise level must be non-negative");
    if (profiles.empty()) throw std::invalid_argument("at least one voltage profile is required");

    MeasurementSet set;
    set.kind = kind;
    set.noise_level = noise_level;
    set.seed = seed;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    for (const auto& profile : profiles) {
        Measurement clean = measure(gamma, profile, mob, kind);
        const double sigma = noise_level * clean.magnitude();
        Measurement noisy = clean;
        if (noise_level > 0.0) {
            if (kind == MeasurementKind::PointwiseTrace) {
                Trace t = clean.trace();
                for (double& v : t.values()) v += sigma * normal(rng);
                noisy = Measurement::pointwise(std::move(t));
            } else {
                noisy = Measurement::current_flow(clean.scalar() + sigma * normal(rng));
            }
        }
        set.entries.push_back(MeasurementEntry{profile, std::move(noisy), std::move(clean)});
    }
    return set;
}

MeasurementSet synthesize_data(const DopingField& truth, const std::vector<VoltageProfile>& profiles,
                               MeasurementKind kind, double lambda_sq, const Mobilities& mob,
                               double noise_level, std::uint64_t seed)
{
    return synthesize_from_gamma(equilibrium_gamma(truth, lambda_sq), profiles, kind, mob, noise_level, seed);
}

namespace {

std::string entry_profile_name(std::size_t j) { return "profile_" + std::to_string(j) + ".csv"; }
std::string entry_data_name(std::size_t j) { return "measurement_" + std::to_string(j) + ".csv"; }

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(io::trim(c));
    return cols;
}

}  // namespace

void save_measurement_set(const std::filesystem::path& dir, const MeasurementSet& set)
{
    set.validate();
    const Grid& g = set.entries.front().profile.grid();
    std::ostringstream manifest;
    manifest << "# dopinv measurement set\n"
             << "grid_n = " << g.n() << '\n'
             << "kind = " << kind_name(set.kind) << '\n'
             << "noise_level = " << io::format_double(set.noise_level) << '\n'
             << "seed = " << set.seed << '\n'
             << "entries = " << set.entries.size() << '\n';
    for (std::size_t j = 0; j < set.entries.size(); ++j) {
        const auto& e = set.entries[j];
        manifest << "profile_" << j << " = " << entry_profile_name(j) << '\n'
                 << "data_" << j << " = " << entry_data_name(j) << '\n';
        io::save_trace(dir / entry_profile_name(j), e.profile.values());

        std::ostringstream os;
        if (set.kind == MeasurementKind::PointwiseTrace) {
            os << "x,clean,noisy\n";
            const Trace& c = e.clean.trace();
            const Trace& d = e.data.trace();
            for (std::size_t k = 0; k < c.size(); ++k) {
                os << io::format_double(g.face_coordinate(static_cast<int>(k))) << ','
                   << io::format_double(c[k]) << ',' << io::format_double(d[k]) << '\n';
            }
        } else {
            os << "value_clean,value_noisy\n"
               << io::format_double(e.clean.scalar()) << ',' << io::format_double(e.data.scalar()) << '\n';
        }
        io::write_text_file(dir / entry_data_name(j), os.str());
    }
    io::write_text_file(dir / "manifest.txt", manifest.str());
}

MeasurementSet load_measurement_set(const std::filesystem::path& dir, const Grid& grid)
{
    const auto manifest_path = dir / "manifest.txt";
    std::ifstream in(manifest_path);
    if (!in) throw io::FormatError("cannot open '" + manifest_path.string() + "' for reading");

    std::map<std::string, std::string> kv;
    try {
        for (auto& item : io::parse_key_values(in)) kv[item.key] = item.value;
    } catch (const io::FormatError& e) {
        throw io::FormatError(manifest_path.string() + ": " + e.what());
    }
    auto need = [&](const std::string& key) -> const std::string& {
        const auto it = kv.find(key);
        if (it == kv.end()) throw io::FormatError(manifest_path.string() + ": missing key '" + key + "'");
        return it->second;
    };

    if (io::parse_integer(need("grid_n")) != grid.n()) {
        throw io::FormatError(manifest_path.string() + ": grid_n " + need("grid_n") + " does not match " +
                              std::to_string(grid.n()));
    }
    MeasurementSet set;
    try {
        set.kind = parse_kind(need("kind"));
    } catch (const std::invalid_argument& e) {
        throw io::FormatError(manifest_path.string() + ": " + e.what());
    }
    set.noise_level = io::parse_double(need("noise_level"));
    set.seed = static_cast<std::uint64_t>(io::parse_integer(need("seed")));
    const long long count = io::parse_integer(need("entries"));
    if (count < 1) throw io::FormatError(manifest_path.string() + ": entries must be >= 1");

    for (long long j = 0; j < count; ++j) {
        const auto profile_path = dir / need("profile_" + std::to_string(j));
        const auto data_path = dir / need("data_" + std::to_string(j));
        VoltageProfile profile(io::load_trace(profile_path, grid, Segment::Bottom));

        std::ifstream din(data_path);
        if (!din) throw io::FormatError("cannot open '" + data_path.string() + "' for reading");
        std::string line;
        std::getline(din, line);
        try {
            if (set.kind == MeasurementKind::PointwiseTrace) {
                if (io::trim(line) != "x,clean,noisy") throw io::FormatError("header must be 'x,clean,noisy'");
                std::vector<double> clean, noisy;
                while (std::getline(din, line)) {
                    if (io::trim(line).empty()) continue;
                    const auto cols = split_csv(line);
                    if (cols.size() != 3) throw io::FormatError("row needs 3 columns: '" + line + "'");
                    clean.push_back(io::parse_double(cols[1]));
                    noisy.push_back(io::parse_double(cols[2]));
                }
                if (clean.size() != static_cast<std::size_t>(grid.n())) {
                    throw io::FormatError("expected " + std::to_string(grid.n()) + " rows");
                }
                set.entries.push_back(MeasurementEntry{std::move(profile),
                                                       Measurement::pointwise(Trace(grid, Segment::Top, noisy)),
                                                       Measurement::pointwise(Trace(grid, Segment::Top, clean))});
            } else {
                if (io::trim(line) != "value_clean,value_noisy") {
                    throw io::FormatError("header must be 'value_clean,value_noisy'");
                }
                if (!std::getline(din, line)) throw io::FormatError("missing value row");
                const auto cols = split_csv(line);
                if (cols.size() != 2) throw io::FormatError("row needs 2 columns: '" + line + "'");
                set.entries.push_back(MeasurementEntry{std::move(profile),
                                                       Measurement::current_flow(io::parse_double(cols[1])),
                                                       Measurement::current_flow(io::parse_double(cols[0]))});
            }
        } catch (const io::FormatError& e) {
            throw io::FormatError(data_path.string() + ": " + e.what());
        }
    }
    set.validate();
    return set;
}

}  // namespace dopinv::forward
