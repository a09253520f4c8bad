#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "csc/container.hpp"
#include "csc/errors.hpp"
#include "csc/experiment.hpp"
#include "csc/pgm.hpp"

using namespace csc;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(CSC_CLI) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

Denoisers small_denoisers() {
    Denoisers d;
    d.dict = DictSpec{5, 6, true}.build();
    d.config.pursuit.max_iters = 40;
    return d;
}

}  // namespace

TEST_CASE("method labels round trip") {
    for (const char* s : {"pa", "cscnet", "csc_q1", "csc_q8", "csc_q11"}) CHECK(Method::parse(s).label() == s);
    CHECK(Method::parse("csc:4").label() == "csc_q4");
    for (const char* s : {"", "csc", "csc_q", "csc_q0", "csc_q4x", "PA", "ksvd"})
        CHECK_THROWS_AS(Method::parse(s), UsageError);
}

TEST_CASE("strictly increasing") {
    CHECK(strictly_increasing({}));
    CHECK(strictly_increasing({1.0}));
    CHECK(strictly_increasing({1.0, 2.0, 2.5}));
    CHECK_FALSE(strictly_increasing({1.0, 1.0}));
    CHECK_FALSE(strictly_increasing({1.0, 3.0, 2.0}));
}

TEST_CASE("csv output parses back") {
    EvalTable t;
    t.columns = {"pa", "csc_q4"};
    t.images = {"a", "b"};
    t.psnr = {{20.0, 21.5}, {30.0, 31.25}};
    t.psnr_clamped = {{20.5, 22.0}, {30.5, 31.75}};
    const CsvTable csv = parse_csv(to_csv(t));
    CHECK(csv.header == std::vector<std::string>{"image", "pa", "csc_q4", "pa_clamped", "csc_q4_clamped"});
    REQUIRE(csv.rows.size() == 3);
    CHECK(csv.rows[2][0] == "Average");
    CHECK(std::stod(csv.rows[2][1]) == doctest::Approx(25.0));
    CHECK(std::stod(csv.rows[2][2]) == doctest::Approx(26.375));
    CHECK(std::stod(csv.rows[1][4]) == doctest::Approx(31.75));

    t.images.resize(1);
    t.psnr.resize(1);
    t.psnr_clamped.resize(1);
    CHECK(parse_csv(to_csv(t)).rows.size() == 1);
}

TEST_CASE("evaluate is deterministic and uses per-image noise") {
    const auto corpus = load_corpus(CSC_DATA_DIR "/desk");
    REQUIRE(corpus.size() == 4);
    std::vector<NamedImage> one{{corpus[0].name, crop(corpus[0].image, 0, 0, 24, 24)}};
    const std::vector<Method> methods{Method::parse("pa"), Method::parse("csc_q5")};
    const Denoisers d = small_denoisers();
    const EvalTable a = evaluate(one, methods, 25.0, {1}, d);
    const EvalTable b = evaluate(one, methods, 25.0, {1}, d);
    CHECK(to_csv(a) == to_csv(b));
    REQUIRE(a.psnr.size() == 1);
    const Image noisy = noisy_version(one[0].image, 25.0, 1, 0);
    for (double v : a.psnr[0]) CHECK(v > psnr(noisy, one[0].image));
    CHECK_FALSE(noisy_version(one[0].image, 25.0, 1, 1) == noisy);
    CHECK_FALSE(noisy_version(one[0].image, 25.0, 2, 0) == noisy);
}

TEST_CASE("cli reruns are byte identical") {
    const fs::path dir = fs::temp_directory_path() / "csc_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto corpus = load_corpus(CSC_DATA_DIR "/desk");
    const fs::path clean = dir / "clean.pgm";
    write_pgm(clean, crop(corpus[1].image, 8, 8, 24, 24));
    const std::string small = " --patch-side 5 --atoms-per-dim 6 --max-iters 30";

    for (int run = 0; run < 2; ++run) {
        const fs::path out = dir / ("run" + std::to_string(run));
        fs::create_directories(out);
        const std::string o = out.string() + "/";
        REQUIRE(run_cli("noise --input " + clean.string() + " --sigma 25 --seed 3 --output " + o + "noisy.bin") == 0);
        REQUIRE(run_cli("denoise --method pa --noisy " + o + "noisy.bin --clean " + clean.string() +
                        " --sigma 25 --output " + o + "pa.bin --report " + o + "pa.json" + small) == 0);
        REQUIRE(run_cli("denoise --method csc --sweep --strides 1,3,5 --noisy " + o + "noisy.bin --clean " +
                        clean.string() + " --sigma 25 --report " + o + "sweep.json --table " + o + "sweep.csv" +
                        small) == 0);
        REQUIRE(run_cli("dict --patch-side 5 --atoms-per-dim 6 --output " + o + "dict.bin") == 0);
        REQUIRE(run_cli("init --preset desk --seed 2 --output " + o + "init.bin") == 0);
        REQUIRE(run_cli("train --corpus " CSC_DATA_DIR "/train --preset desk --epochs 2 --steps-per-epoch 2 "
                        "--checkpoint-out " + o + "ckpt.bin --loss-csv " + o + "loss.csv") == 0);
        REQUIRE(run_cli("denoise --method cscnet --checkpoint " + o + "ckpt.bin --noisy " + o + "noisy.bin --clean " +
                        clean.string() + " --sigma 25 --output " + o + "net.bin") == 0);
    }
    for (const char* f : {"noisy.bin", "noisy.pgm", "pa.bin", "pa.json", "sweep.json", "sweep.csv", "dict.bin",
                          "init.bin", "ckpt.bin", "loss.csv", "net.bin"}) {
        INFO(f);
        const std::string a = slurp(dir / "run0" / f);
        CHECK_FALSE(a.empty());
        CHECK(a == slurp(dir / "run1" / f));
    }
    CHECK(is_container(dir / "run0" / "noisy.bin"));

    // exit codes
    CHECK(run_cli("") == 2);
    CHECK(run_cli("denoise --method pa --noisy " + clean.string() + " --stride 4") == 2);
    CHECK(run_cli("denoise --method fancy --noisy " + clean.string()) == 2);
    CHECK(run_cli("denoise --method pa --noisy " + (dir / "nope.pgm").string()) == 3);
    CHECK(run_cli("denoise --method cscnet --noisy " + clean.string() + " --checkpoint " +
                  (dir / "run0" / "dict.bin").string()) == 3);
    fs::remove_all(dir);
}
