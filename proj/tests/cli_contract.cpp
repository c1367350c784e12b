// Black-box contract checks of the command-line tool: exit codes, artifact
// layout, and determinism of outputs. Takes the tool path as argv[1].

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int g_failures = 0;
std::string g_tool;
fs::path g_work;

void record(const std::string& name, bool ok, const std::string& detail = "") {
    std::printf("[%s] %s%s%s\n", ok ? "PASS" : "FAIL", name.c_str(),
                detail.empty() ? "" : " -- ", detail.c_str());
    if (!ok) ++g_failures;
}

int run(const std::string& args) {
    const std::string cmd = g_tool + " " + args + " >>" + (g_work / "cli.log").string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    if (rc == -1 || !WIFEXITED(rc)) return -1;
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: cli_contract <tool-path>\n";
        return 2;
    }
    g_tool = argv[1];
    g_work = fs::temp_directory_path() / "tmfg_cli_contract";
    fs::remove_all(g_work);
    fs::create_directories(g_work);

    const fs::path cfg = g_work / "desk.cfg";
    write(cfg, "Nx = 24\nT = 0.6\ntau = 0.05\nn_iters = 5\nseed = 11\n");

    record("print-config with defaults exits cleanly", run("print-config") == 0);
    record("print-config rejects a malformed file", [&] {
        write(g_work / "bad.cfg", "speed = 9\n");
        return run("print-config --config " + (g_work / "bad.cfg").string()) == 2;
    }());

    record("check-cfl accepts an admissible step",
           run("check-cfl --config " + cfg.string()) == 0);
    record("check-cfl rejects tau of one second", [&] {
        write(g_work / "slow.cfg", "Nx = 24\nT = 0.6\ntau = 1\n");
        return run("check-cfl --config " + (g_work / "slow.cfg").string()) == 3;
    }());

    record("solve rejects an unknown config key with exit 2", [&] {
        write(g_work / "unknown.cfg", "Nx = 24\nalpa = 1\n");
        return run("solve --config " + (g_work / "unknown.cfg").string() + " --out " +
                   (g_work / "never").string()) == 2;
    }());
    record("solve rejects a CFL-violating step with exit 3", [&] {
        write(g_work / "slow2.cfg", "Nx = 24\nT = 0.6\ntau = 1\n");
        return run("solve --config " + (g_work / "slow2.cfg").string() + " --out " +
                   (g_work / "never").string()) == 3;
    }());

    const fs::path out1 = g_work / "run1";
    const int solve_rc = run("solve --config " + cfg.string() + " --out " + out1.string());
    record("solve writes the artifact directory", solve_rc == 0,
           "exit = " + std::to_string(solve_rc));
    record("artifacts contain manifest, logs, fields, and hydro series",
           fs::exists(out1 / "manifest.cfg") && fs::exists(out1 / "iterations.csv") &&
               fs::exists(out1 / "hydro.csv") && fs::exists(out1 / "fields" / "index.csv") &&
               fs::exists(out1 / "fields" / "rho_000000.bin") &&
               fs::exists(out1 / "fields" / "V_000012.bin") &&
               fs::exists(out1 / "fields" / "ustar_000012.bin"));
    record("the manifest is itself a loadable config",
           run("print-config --config " + (out1 / "manifest.cfg").string()) == 0);
    record("a run reproduced from its manifest is bit-identical", [&] {
        const fs::path out2 = g_work / "run2";
        if (run("solve --config " + (out1 / "manifest.cfg").string() + " --out " +
                out2.string()) != 0)
            return false;
        return slurp(out1 / "iterations.csv") == slurp(out2 / "iterations.csv") &&
               slurp(out1 / "fields" / "rho_000012.bin") ==
                   slurp(out2 / "fields" / "rho_000012.bin");
    }());

    record("solve with a single iteration reports non-convergence (exit 5)", [&] {
        const fs::path out = g_work / "oneiter";
        const int rc = run("solve --config " + cfg.string() + " --out " + out.string() +
                           " --iters 1");
        return rc == 5 && fs::exists(out / "iterations.csv");
    }());

    record("hydro recomputation matches the in-solve series byte for byte", [&] {
        const std::string before = slurp(out1 / "hydro.csv");
        if (run("hydro --artifacts " + out1.string()) != 0) return false;
        return !before.empty() && slurp(out1 / "hydro.csv") == before;
    }());
    record("hydro on a missing directory exits 6",
           run("hydro --artifacts " + (g_work / "missing").string()) == 6);

    record("particles on missing artifacts exits 6",
           run("particles --config " + cfg.string() + " --artifacts " +
               (g_work / "missing").string()) == 6);
    record("particles on artifacts without controls exits 6", [&] {
        const fs::path crippled = g_work / "crippled";
        fs::copy(out1, crippled, fs::copy_options::recursive);
        for (const auto& e : fs::directory_iterator(crippled / "fields"))
            if (e.path().filename().string().rfind("ustar_", 0) == 0) fs::remove(e.path());
        return run("particles --config " + cfg.string() + " --artifacts " + crippled.string()) ==
               6;
    }());

    record("particles writes one row per checkpoint per ensemble size", [&] {
        if (run("particles --config " + cfg.string() + " --artifacts " + out1.string() +
                " --n-sweep 50,100 --seed 7") != 0)
            return false;
        std::ifstream in(out1 / "particles.csv");
        std::string line;
        int rows = 0;
        std::getline(in, line);  // header
        if (line != "n,time,l1_position,l1_velocity") return false;
        while (std::getline(in, line))
            if (!line.empty()) ++rows;
        return rows == 2 * 13;  // 13 checkpoints for T = 0.6, tau = 0.05
    }());
    record("particle statistics are reproducible for a fixed seed", [&] {
        const std::string first = slurp(out1 / "particles.csv");
        if (run("particles --config " + cfg.string() + " --artifacts " + out1.string() +
                " --n-sweep 50,100 --seed 7") != 0)
            return false;
        return slurp(out1 / "particles.csv") == first;
    }());
    record("trajectory dump produces the decimated table", [&] {
        if (run("particles --config " + cfg.string() + " --artifacts " + out1.string() +
                " --n-sweep 20 --seed 3 --traj-stride 4") != 0)
            return false;
        std::ifstream in(out1 / "trajectories_n20.csv");
        std::string header;
        std::getline(in, header);
        int rows = 0;
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) ++rows;
        // 12 steps of tau_p = tau: dumps at steps 0,4,8,12 -> 4 dumps x 20 ids
        return header == "time,id,x,v" && rows == 4 * 20;
    }());

    std::printf("%s: %d contract failure(s)\n", g_failures ? "FAIL" : "OK", g_failures);
    return g_failures ? 1 : 0;
}
