#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "stuckat/experiments.hpp"
#include "stuckat/formats.hpp"
#include "stuckat/instances.hpp"

using namespace stuckat;
namespace fs = std::filesystem;

namespace {

struct run_result {
    int status;
    std::string out;
};

run_result run_cli(const std::string& args) {
    const std::string cmd = std::string(STUCKAT_CLI_PATH) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char buf[4096];
    while (std::size_t got = fread(buf, 1, sizeof buf, pipe)) out.append(buf, got);
    const int rc = pclose(pipe);
    return {WEXITSTATUS(rc), out};
}

fs::path temp_dir() {
    const fs::path dir = fs::temp_directory_path() / "stuckat-cli-test";
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("encode/decode file round trip, sidechannel") {
    const fs::path dir = temp_dir();
    std::mt19937_64 rng(404);
    const std::size_t n = 512;
    const memory_image image{random_bits(rng, n),
                             random_frozen(rng, n, n / 5, defect_model::uniform)};
    {
        std::ofstream os(dir / "image.txt");
        io::write_image(image, os);
    }
    const bit_vector msg = random_bits(rng, 30);
    {
        std::ofstream os(dir / "msg.txt");
        os << msg.to_string() << "\n";
    }

    const auto enc = run_cli("encode --codec sidechannel --n 512 --c 3 --image " + (dir / "image.txt").string() +
                             " --message-file " + (dir / "msg.txt").string() + " --out " +
                             (dir / "stored.txt").string() + " --meta " + (dir / "meta.txt").string() + " --seed 5");
    REQUIRE(enc.status == 0);

    const auto dec = run_cli("decode --codec sidechannel --n 512 --c 3 --stored " + (dir / "stored.txt").string() +
                             " --meta " + (dir / "meta.txt").string());
    REQUIRE(dec.status == 0);
    CHECK(dec.out == msg.to_string() + "\n");
}

TEST_CASE("encode/decode file round trip, strong (decoder gets no frozen data)") {
    const fs::path dir = temp_dir();
    std::mt19937_64 rng(405);
    const std::size_t n = 1 << 14;
    const memory_image image{random_bits(rng, n), random_frozen(rng, n, n / 10, defect_model::uniform)};
    {
        std::ofstream os(dir / "simage.txt");
        io::write_image(image, os);
    }
    const bit_vector msg = random_bits(rng, 500);
    {
        std::ofstream os(dir / "smsg.txt");
        os << msg.to_string() << "\n";
    }

    const auto enc = run_cli("encode --codec strong --n 16384 --c 4 --image " + (dir / "simage.txt").string() +
                             " --message-file " + (dir / "smsg.txt").string() + " --out " +
                             (dir / "sstored.txt").string() + " --seed 5 --save-profile " +
                             (dir / "sprof.txt").string());
    REQUIRE(enc.status == 0);

    // the stored file holds only the raw vector: the decode side cannot read
    // the frozen set or rho from anywhere
    {
        std::ifstream is(dir / "sstored.txt");
        std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
        CHECK(text.find("frozen") == std::string::npos);
    }

    const auto dec = run_cli("decode --codec strong --profile " + (dir / "sprof.txt").string() + " --stored " +
                             (dir / "sstored.txt").string());
    REQUIRE(dec.status == 0);
    CHECK(dec.out == msg.to_string() + "\n");
}

TEST_CASE("over-capacity encode exits nonzero with MessageTooLong") {
    const fs::path dir = temp_dir();
    std::mt19937_64 rng(406);
    const std::size_t n = 512;
    std::vector<std::uint32_t> all;
    for (std::uint32_t i = 0; i < n; ++i) all.push_back(i);
    const memory_image image{random_bits(rng, n), frozen_set::from_indices(std::move(all), n)};
    {
        std::ofstream os(dir / "full.txt");
        io::write_image(image, os);
    }
    {
        std::ofstream os(dir / "one.txt");
        os << "1\n";
    }
    const auto enc = run_cli("encode --codec sidechannel --n 512 --c 3 --image " + (dir / "full.txt").string() +
                             " --message-file " + (dir / "one.txt").string() + " --out " + (dir / "x.txt").string() +
                             " --meta " + (dir / "xm.txt").string());
    CHECK(enc.status == 2);
}

TEST_CASE("roundtrip subcommand reports and exits by match status") {
    const fs::path dir = temp_dir();
    const auto rt = run_cli("roundtrip --codec sidechannel --n 512 --c 3 --rho 0.3 --trials 25 --seed 7 --report " +
                            (dir / "rt.jsonl").string());
    REQUIRE(rt.status == 0);
    std::ifstream is(dir / "rt.jsonl");
    REQUIRE(is.good());
    const auto rep = experiment_report::read_jsonl(is);
    CHECK(rep.records.size() == 25);
}

TEST_CASE("bias-audit subcommand") {
    const auto ba = run_cli("bias-audit --r 16 --k 2 --mu-log2 -4");
    CHECK(ba.status == 0);
    CHECK(ba.out.find("\"pass\": true") != std::string::npos);
}

TEST_CASE("rate-sweep subcommand writes CSV") {
    const fs::path dir = temp_dir();
    const auto rs =
        run_cli("rate-sweep --codec sidechannel --n 4096 --c 4 --rho-grid 0.1 0.4 0.7 --csv " + (dir / "rs.csv").string());
    REQUIRE(rs.status == 0);
    std::ifstream is(dir / "rs.csv");
    std::string header;
    std::getline(is, header);
    CHECK(header == "rho,formula_len,capacity,formula_accepted,beyond_rejected");
}

TEST_CASE("usage errors print help and exit nonzero") {
    const auto bad = run_cli("decode");
    CHECK(bad.status != 0);
}
