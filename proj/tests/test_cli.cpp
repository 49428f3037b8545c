#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>

namespace fs = std::filesystem;

namespace {

std::string binary() {
    const char* env = std::getenv("MEMRC_BIN");
    return env && *env ? env : "./memrc";
}

int run(const std::string& args, const std::string& log = "/dev/null") {
    const std::string cmd = binary() + " " + args + " >" + log + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("memrc_cli_test_" + std::to_string(std::rand()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("help and usage errors") {
    CHECK(run("--help") == 0);
    CHECK(run("") == 2);                       // missing subcommand
    CHECK(run("frobnicate") == 2);             // unknown subcommand
    CHECK(run("characterize -d 3.0uM --which warble") == 2);
    CHECK(run("characterize -d 9.9uM --which sweep") == 2);  // unknown label
}

TEST_CASE("unit suffixes are mandatory") {
    TempDir tmp;
    CHECK(run("characterize -d 3.0uM --which ppf --pw 5 --ipi 5ms -o " +
              tmp.str()) == 2);
    CHECK(run("characterize -d 3.0uM --which ppf --pw 5ms --ipi 5ms --v 170 -o " +
              tmp.str()) == 2);
    // a time suffix on a voltage flag is also rejected
    CHECK(run("characterize -d 3.0uM --which ppf --v 170ms -o " + tmp.str()) == 2);
    CHECK(run("characterize -d 3.0uM --which ppf --pw 5ms --ipi 5ms --v 170mV -o " +
              tmp.str()) == 0);
}

TEST_CASE("characterize sweep writes a monotone trace") {
    TempDir tmp;
    REQUIRE(run("characterize -d 2.0uM --which sweep --rate 50mV/s --dt 1ms -o " +
                tmp.str()) == 0);
    std::ifstream csv(tmp.path / "sweep.csv");
    REQUIRE(csv.good());
    std::string header;
    std::getline(csv, header);
    CHECK(header == "t_s,v_V,i_A");
    double prev_t = -1.0;
    std::string line;
    std::size_t rows = 0;
    while (std::getline(csv, line)) {
        const double t = std::stod(line);
        CHECK(t > prev_t);
        prev_t = t;
        ++rows;
    }
    CHECK(rows > 1000);
}

TEST_CASE("sonds runs are deterministic byte for byte") {
    TempDir a, b;
    REQUIRE(run("sonds --seed 7 -o " + a.str()) == 0);
    REQUIRE(run("sonds --seed 7 -o " + b.str()) == 0);
    CHECK(slurp(a.path / "sonds_summary.json") ==
          slurp(b.path / "sonds_summary.json"));
    CHECK(slurp(a.path / "pred_test.csv") == slurp(b.path / "pred_test.csv"));
    CHECK(!slurp(a.path / "model.json").empty());

    TempDir c;
    REQUIRE(run("sonds --seed 8 -o " + c.str()) == 0);
    CHECK(slurp(a.path / "sonds_summary.json") !=
          slurp(c.path / "sonds_summary.json"));
}

TEST_CASE("gridsearch single cell emits a ranked csv and best config") {
    TempDir tmp;
    REQUIRE(run("gridsearch --seed 3 --gamma-points 1 --delta-points 1 "
                "--dt-points 1 -o " + tmp.str()) == 0);
    const std::string csv = slurp(tmp.path / "grid.csv");
    CHECK(csv.rfind("gamma_V,delta_V,dt_s,nmse_train,nmse_test", 0) == 0);
    // header plus exactly one cell
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
    const std::string best = slurp(tmp.path / "best_config.json");
    CHECK(best.find("\"gamma_V\"") != std::string::npos);
    CHECK(best.find("\"nmse_test\"") != std::string::npos);
}

TEST_CASE("fit round-trips simulated traces") {
    TempDir tmp;
    // 2.0uM operating point is ~111.6 mV; generate traces then fit them
    REQUIRE(run("characterize -d 2.0uM --which sweep --dt 1ms -o " + tmp.str()) == 0);
    REQUIRE(run("characterize -d 2.0uM --which decay --v 111.6mV -o " +
                tmp.str()) == 0);

    // a single v_low cannot constrain both tau branches -> numerical failure
    REQUIRE(run("fit --sweep " + (tmp.path / "sweep.csv").string() +
                " --decay " + (tmp.path / "decay.csv").string() +
                " --v-high 111.6mV --v-low 50mV --vt 46.4mV -o " +
                tmp.str()) == 3);

    CHECK(run("fit --sweep missing.csv --decay missing.csv --v-high 95mV "
              "--v-low 50mV -o " + tmp.str()) == 2);
}

TEST_CASE("fit rejects malformed csv naming the row") {
    TempDir tmp;
    const fs::path bad = tmp.path / "bad.csv";
    {
        std::ofstream out(bad);
        out << "t_s,v_V,i_A\n0.0,0.0,0.0\n0.1,oops,0.0\n";
    }
    const fs::path log = tmp.path / "log.txt";
    CHECK(run("fit --sweep " + bad.string() + " --decay " + bad.string() +
              " --v-high 95mV --v-low 50mV -o " + tmp.str(), log.string()) == 2);
    const std::string msg = slurp(log);
    CHECK(msg.find("row 3") != std::string::npos);

    const fs::path empty = tmp.path / "empty.csv";
    std::ofstream(empty).close();
    CHECK(run("fit --sweep " + empty.string() + " --decay " + empty.string() +
              " --v-high 95mV --v-low 50mV -o " + tmp.str()) == 2);

    const fs::path headerless = tmp.path / "headerless.csv";
    {
        std::ofstream out(headerless);
        out << "0.0,0.0,0.0\n0.1,0.01,1e-9\n";
    }
    CHECK(run("fit --sweep " + headerless.string() + " --decay " +
              headerless.string() + " --v-high 95mV --v-low 50mV -o " +
              tmp.str()) == 2);
}

TEST_CASE("simulate drives a custom waveform") {
    TempDir tmp;
    const fs::path wf = tmp.path / "waveform.csv";
    {
        std::ofstream out(wf);
        out << "t_s,v_V\n";
        for (int k = 1; k <= 2000; ++k)
            out << k * 1e-4 << ',' << (k < 1000 ? 0.02 : 0.09) << '\n';
    }
    REQUIRE(run("simulate -d 3.0uM --waveform " + wf.string() + " -o " +
                tmp.str()) == 0);
    const std::string trace = slurp(tmp.path / "simulated.csv");
    CHECK(trace.rfind("t_s,v_V,i_A", 0) == 0);
    CHECK(std::count(trace.begin(), trace.end(), '\n') == 2001);

    CHECK(run("simulate -d 3.0uM --waveform " + wf.string() +
              " --method warp -o " + tmp.str()) == 2);
}

TEST_CASE("preset files override the built-in bank") {
    TempDir tmp;
    const fs::path presets = tmp.path / "presets.json";
    {
        std::ofstream out(presets);
        out << R"({"custom": {"n0": 140.0, "ve": 5.7e-3, "tau01": 1.1e-3,
                  "vtau1": 43.2e-3, "tau02": 0.2e-3, "vtau2": 19.0e-3,
                  "vt": 57e-3, "g_scale": 8.2e-16}})";
    }
    CHECK(run("characterize -d custom --which ppf --presets " +
              presets.string() + " -o " + tmp.str()) == 0);
    CHECK(run("characterize -d 3.0uM --which ppf --presets " + presets.string() +
              " -o " + tmp.str()) == 2);
}
