#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <sys/wait.h>

#include "dopinv/cli/commands.hpp"
#include "dopinv/cli/config.hpp"
#include "dopinv/io.hpp"

using namespace dopinv;
using namespace dopinv::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    auto p = fs::temp_directory_path() / ("dopinv_test_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

RunConfig parse(const std::string& text)
{
    std::istringstream is(text);
    return parse_config(is);
}

std::string config_error(const std::string& text)
{
    try {
        parse(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

fs::path write_config(const fs::path& dir, const std::string& text)
{
    const auto path = dir / "run.cfg";
    std::ofstream(path) << text;
    return path;
}

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(const std::string& command, const fs::path& dir, const std::string& text)
{
    std::ostringstream out, err;
    const int code = run_command(command, write_config(dir, text), dir / "out", out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config: defaults and parsing")
{
    const auto cfg = parse("grid_n = 16\n");
    CHECK(cfg.grid_n == 16);
    CHECK(cfg.lambda_sq == 1e-3);
    CHECK(cfg.mu_p == 0.3);
    CHECK(cfg.profiles.size() == 1);
    CHECK(cfg.profiles[0].half_width == 0.25);
    CHECK(cfg.kind == forward::MeasurementKind::PointwiseTrace);
    CHECK(cfg.inversion.step_size == 0.5);
    CHECK(cfg.inversion.max_iters == 200);
    CHECK(cfg.inversion.discrepancy_tau == 1.5);
    CHECK(cfg.resolved_gamma_n() == std::exp(std::asinh(2.5)));
    CHECK(cfg.resolved_gamma_p() == std::exp(std::asinh(-2.5)));

    const auto full = parse("grid_n = 8\nphantom = circle 0.4 0.6 0.2\nprofile = 0.3 0.2 1\nprofile = 0.7 0.2 -1\n"
                            "kind = current-flow\nbeta = 0.25\ninit = lshape\nout = somewhere\n");
    CHECK(full.profiles.size() == 2);
    CHECK(full.kind == forward::MeasurementKind::CurrentFlow);
    CHECK(full.inversion.step_size == 0.25);
    CHECK(std::holds_alternative<level_set::Circle>(full.phantom.shape));
    CHECK(std::holds_alternative<level_set::Polygon>(full.init));
    CHECK(full.out_dir == fs::path("somewhere"));
}

TEST_CASE("config: strict errors name the key on one line")
{
    const std::pair<const char*, const char*> cases[] = {
        {"grid_n = 16\nbogus = 1\n", "bogus"},
        {"grid_n = 16\ngrid_n = 8\n", "grid_n"},
        {"lambda_sq = 1e-3\n", "grid_n"},
        {"grid_n = 2\n", "grid_n"},
        {"grid_n = 16\nlambda_sq = -1\n", "lambda_sq"},
        {"grid_n = 16\nmu_p = abc\n", "mu_p"},
        {"grid_n = 16\nc_min = 5\nc_max = -5\n", "c_max"},
        {"grid_n = 16\nphantom = triangle\n", "phantom"},
        {"grid_n = 16\nkind = flux\n", "kind"},
        {"grid_n = 16\nnoise_level = -0.1\n", "noise_level"},
        {"grid_n = 16\nprofile = 0.5 0.001 1\n", "profile"},
        {"grid_n = 16\nbeta = -1\n", "beta"},
        {"grid_n = 16\nmax_iters = 0\n", "max_iters"},
        {"grid_n = 16\ntau = 0.5\n", "tau"},
        {"grid_n = 16\ninit = circle 0.5 0.5 -1\n", "init"},
        {"grid_n = 16\ngamma_p = 3\ngamma_n = 2\n", "gamma_n"},
        {"grid_n = 16\nseed = -4\n", "seed"},
        {"grid_n = 16\nphantom = uniform 9\n", "phantom"},
        {"grid_n 16\n", "config"},
    };
    for (const auto& [text, key] : cases) {
        CAPTURE(text);
        const std::string msg = config_error(text);
        REQUIRE_FALSE(msg.empty());
        CHECK(msg.find(key) != std::string::npos);
        CHECK(msg.find('\n') == std::string::npos);
    }
}

TEST_CASE("phantom command")
{
    const auto dir = scratch("phantom");
    const auto r = run("phantom", dir, "grid_n = 16\nphantom = halfplane y 0.5\nc_min = -5\nc_max = 5\n");
    REQUIRE(r.code == kExitOk);
    const auto ind = io::load_field(dir / "out" / "indicator.txt");
    double ones = 0.0;
    for (double v : ind.values()) ones += v;
    CHECK(ones == 128.0);

    const auto doping = io::load_field(dir / "out" / "doping.txt");
    const std::set<double> levels(doping.values().begin(), doping.values().end());
    CHECK(levels == std::set<double>{-5.0, 5.0});

    const auto text = slurp(dir / "out" / "gamma.txt");
    std::ostringstream again;
    io::write_field(again, io::load_field(dir / "out" / "gamma.txt"));
    CHECK(again.str() == text);
    fs::remove_all(dir);
}

TEST_CASE("forward command")
{
    const auto dir = scratch("forward");
    SUBCASE("flat coefficient gives current flow 2")
    {
        const auto r = run("forward", dir,
                           "grid_n = 32\nphantom = uniform 0\nmu_n = 1\nmu_p = 1\nprofile = 0.5 0.6 1\n"
                           "kind = current-flow\n");
        REQUIRE(r.code == kExitOk);
        std::istringstream line(r.out);
        std::string tag;
        int j = -1;
        std::string clean;
        line >> tag >> j >> clean;
        CHECK(tag == "current_flow");
        CHECK(j == 0);
        CHECK(std::abs(io::parse_double(clean) - 2.0) <= 1e-8);
    }
    SUBCASE("zero noise: identical columns")
    {
        const auto r = run("forward", dir, "grid_n = 16\nnoise_level = 0\nseed = 3\n");
        REQUIRE(r.code == kExitOk);
        std::ifstream in(dir / "out" / "data" / "measurement_0.csv");
        std::string line;
        std::getline(in, line);
        CHECK(line == "x,clean,noisy");
        int rows = 0;
        while (std::getline(in, line)) {
            const auto a = line.find(','), b = line.rfind(',');
            CHECK(line.substr(a + 1, b - a - 1) == line.substr(b + 1));
            ++rows;
        }
        CHECK(rows == 16);
    }
    SUBCASE("zero voltage: zero measurement")
    {
        const auto r = run("forward", dir, "grid_n = 16\nprofile = 0.5 0.25 0\n");
        REQUIRE(r.code == kExitOk);
        const auto set = forward::load_measurement_set(dir / "out" / "data", Grid(16));
        CHECK(set.entries[0].data.magnitude() == 0.0);
    }
    fs::remove_all(dir);
}

TEST_CASE("invert command")
{
    const auto dir = scratch("invert");
    SUBCASE("fixed point")
    {
        const auto r = run("invert", dir, "grid_n = 16\nphantom = halfplane y 0.5\ninit = halfplane y 0.5\n");
        CHECK(r.code == kExitOk);
        const auto csv = slurp(dir / "out" / "convergence.csv");
        CHECK(csv == "iter,residual,symdiff_error\n0,0,0\n");
        for (const char* f : {"phi.txt", "gamma.txt", "indicator.txt"}) CHECK(fs::exists(dir / "out" / f));
    }
    SUBCASE("max_iters without convergence exits 4 and still writes results")
    {
        const auto r = run("invert", dir, "grid_n = 16\nmax_iters = 3\n");
        CHECK(r.code == kExitNotConverged);
        CHECK(fs::exists(dir / "out" / "phi.txt"));
    }
    SUBCASE("missing data file")
    {
        const auto r = run("invert", dir, "grid_n = 16\ndata_dir = " + (dir / "nowhere").string() + "\n");
        CHECK(r.code == kExitConfig);
        CHECK(r.err.find((dir / "nowhere").string()) != std::string::npos);
    }
    SUBCASE("forward output feeds invert")
    {
        REQUIRE(run("forward", dir, "grid_n = 16\nkind = current-flow\n").code == kExitOk);
        fs::rename(dir / "out" / "data", dir / "data");
        const auto r = run("invert", dir,
                           "grid_n = 16\nkind = current-flow\nmax_iters = 5\ndata_dir = " + (dir / "data").string() + "\n");
        CHECK((r.code == kExitOk || r.code == kExitNotConverged));
        const auto k = run("invert", dir, "grid_n = 16\nkind = pointwise\ndata_dir = " + (dir / "data").string() + "\n");
        CHECK(k.code == kExitConfig);
    }
    SUBCASE("repeated runs are byte-identical")
    {
        const std::string cfg = "grid_n = 16\nphantom = lshape\nmax_iters = 30\nnoise_level = 0.01\nseed = 9\n";
        run("invert", dir, cfg);
        std::vector<std::string> first;
        for (const char* f : {"convergence.csv", "phi.txt", "gamma.txt", "indicator.txt"}) first.push_back(slurp(dir / "out" / f));
        fs::remove_all(dir / "out");
        run("invert", dir, cfg);
        int i = 0;
        for (const char* f : {"convergence.csv", "phi.txt", "gamma.txt", "indicator.txt"}) CHECK(slurp(dir / "out" / f) == first[i++]);
    }
    fs::remove_all(dir);
}

TEST_CASE("gradcheck command")
{
    const auto dir = scratch("gradcheck");
    auto r = run("gradcheck", dir, "grid_n = 8\n");
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("PASS") != std::string::npos);

    r = run("gradcheck", dir, "grid_n = 8\nkind = current-flow\nseed = 4\n");
    CHECK(r.code == kExitOk);

    r = run("gradcheck", dir, "grid_n = 64\n");
    CHECK(r.code == kExitConfig);
    CHECK(r.err.find("grid_n") != std::string::npos);

    r = run("gradcheck", dir, "grid_n = 8\ngradcheck_mode = self\n");
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("rel_error 0\n") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("executable exit codes")
{
    const char* exe = std::getenv("DOPINV_EXE");
    if (exe == nullptr) {
        MESSAGE("DOPINV_EXE not set; skipping");
        return;
    }
    const auto dir = scratch("exe");
    auto status = [&](const std::string& args) {
        const int s = std::system((std::string(exe) + " " + args + " >/dev/null 2>&1").c_str());
        return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
    };
    const auto good = write_config(dir, "grid_n = 8\n");
    CHECK(status("gradcheck --config " + good.string() + " --out " + (dir / "o").string()) == kExitOk);
    CHECK(status("phantom --config " + (dir / "absent.cfg").string()) == kExitConfig);
    CHECK(status("invert") == kExitConfig);
    CHECK(status("--help") == 0);
    std::ofstream(dir / "bad.cfg") << "grid_n = 8\nwat = 1\n";
    CHECK(status("phantom --config " + (dir / "bad.cfg").string()) == kExitConfig);
    fs::remove_all(dir);
}
