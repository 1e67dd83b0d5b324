#include "cwnoise/cli.hpp"
#include "cwnoise/error.hpp"
#include "cwnoise/io.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace cwnoise;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto d = fs::temp_directory_path() / "cwnoise_cli_test" / name;
    fs::remove_all(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int run(std::vector<std::string> args) {
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return cli::main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("config json round trip and validation") {
    cli::RunConfig c;
    c.command = "simulate";
    c.probes = {1.0, 2.5};
    c.seed = 99;
    const auto j = cli::to_json(c);
    const auto back = cli::config_from_json(j);
    CHECK(back.probes == c.probes);
    CHECK(back.seed == 99);
    CHECK(cli::to_json(back) == j);

    auto bad = j;
    bad["not_a_field"] = 1;
    CHECK_THROWS_AS(cli::config_from_json(bad), ValidationError);
    bad = j;
    bad["seed"] = "seven";
    CHECK_THROWS_AS(cli::config_from_json(bad), ValidationError);

    cli::RunConfig v;
    v.command = "simulate";
    CHECK_THROWS_AS(v.validate(), ValidationError);
    v.command = "nope";
    CHECK_THROWS_AS(v.validate(), ValidationError);
}

TEST_CASE("zero spectrum simulates flat curves and reruns byte for byte") {
    const auto dir = fresh_dir("zero");
    cli::RunConfig c;
    c.command = "simulate";
    c.spectrum_amplitude = 0.0;
    c.probes = {10.0, 20.0};
    c.sweep_realizations = 20;
    c.sweep_intervals = 10;
    c.output_dir = dir.string();
    const auto files = cli::cmd_simulate(c);
    CHECK(files.size() == 4);
    for (const auto* name : {"sweep_000.csv", "sweep_001.csv"}) {
        const auto curve = io::read_decay_curve(dir / name);
        for (double v : curve.mean_sigma_x) CHECK(v == 1.0);
    }
    // rerun from the manifest alone
    const auto again = fresh_dir("zero_again");
    auto m = cli::load_config(dir / "manifest.json");
    CHECK(m.command == "simulate");
    m.output_dir = again.string();
    cli::cmd_simulate(m);
    CHECK(slurp(dir / "sweep_001.csv") == slurp(again / "sweep_001.csv"));
}

TEST_CASE("command line exit codes and flag precedence") {
    const auto dir = fresh_dir("flags");
    CHECK(run({"cwnoise", "simulate", "--probes", "10", "--sweep-realizations", "4", "--sweep-intervals", "10",
               "--spectrum-amplitude", "0", "--output-dir", dir.string()}) == cli::ok);
    const auto m = cli::load_config(dir / "manifest.json");
    CHECK(m.sweep_realizations == 4);

    // flags override the config file
    const auto dir2 = fresh_dir("flags2");
    CHECK(run({"cwnoise", "simulate", "--config", (dir / "manifest.json").string(), "--sweep-realizations", "6",
               "--output-dir", dir2.string()}) == cli::ok);
    const auto m2 = cli::load_config(dir2 / "manifest.json");
    CHECK(m2.sweep_realizations == 6);
    CHECK(m2.probes == std::vector<double>{10.0});

    CHECK(run({"cwnoise", "simulate", "--output-dir", dir.string()}) == cli::validation_failure);
    CHECK(run({"cwnoise", "reconstruct", "--input-dir", (dir / "missing").string()}) == cli::validation_failure);
    CHECK(run({"cwnoise", "bogus"}) == cli::validation_failure);
}

TEST_CASE("kernels and fit commands") {
    const auto dir = fresh_dir("kernels");
    cli::RunConfig c;
    c.command = "kernels";
    c.kernel_points = 8;
    c.kernel_intervals = 2;
    c.output_dir = dir.string();
    cli::cmd_kernels(c);
    const auto f2 = io::read_csv(dir / "kernels_f2.csv");
    CHECK(f2.rows.size() == 3 * 8);
    CHECK(io::read_csv(dir / "kernels_f4.csv").rows.size() == 64);

    DecayCurve curve;
    for (int j = 0; j <= 40; ++j) {
        curve.times.push_back(0.05 * j);
        curve.mean_sigma_x.push_back(std::exp(-0.7 * 0.05 * j));
    }
    curve.rabi = 50.0;
    io::write_decay_curve(dir / "c.csv", curve);
    cli::RunConfig f;
    f.command = "fit";
    f.fit_files = {(dir / "c.csv").string()};
    f.output_dir = (dir / "fit").string();
    cli::cmd_fit(f);
    const auto report = io::read_json(dir / "fit" / "fit_report.json");
    CHECK(report["exponential"][0]["rate"].get<double>() == doctest::Approx(0.7).epsilon(1e-9));
}
