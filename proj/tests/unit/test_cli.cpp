#include <doctest.h>

#include <json.hpp>

#include "ambiprobe/cli.hpp"
#include "ambiprobe/manifest.hpp"
#include "helpers.hpp"

using namespace ambiprobe;
using testing::run_cli;
using nlohmann::json;

namespace {

std::string fx(const std::string& name) { return (testing::fixture_dir() / name).string(); }

std::vector<std::string> probe_args(const std::string& out, const std::string& threads) {
  return {"probe",      "--dataset",   fx("fixture.csv"),
          "--summaries", fx("pair_summaries.csv"),
          "--judgments", fx("judgments.jsonl"),
          "--dump",      fx("fixture-base.jsonl"),
          "--dump",      fx("fixture-mini.jsonl"),
          "--threads",   threads,
          "--out",       out};
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit 2") {
    CHECK(run_cli({}).code == kExitUsage);
    CHECK(run_cli({"validate"}).code == kExitUsage);
    CHECK(run_cli({"frobnicate"}).code == kExitUsage);
    CHECK(run_cli({"validate", "--dataset", "/no/such/file.csv"}).code == kExitUsage);
    testing::TempDir t("cli");
    const auto r = run_cli({"probe", "--dataset", fx("fixture.csv"), "--dump",
                            fx("fixture-mini.jsonl"), "--layers", "9-12", "--out",
                            (t / "o").string()});
    CHECK(r.code == kExitUsage);
    CHECK(r.err.find("--layers") != std::string::npos);
  }

  TEST_CASE("help and version exit 0") {
    CHECK(run_cli({"--help"}).code == kExitOk);
    const auto v = run_cli({"--version"});
    CHECK(v.code == kExitOk);
    CHECK(v.out == std::string(tool_version()) + "\n");
  }

  TEST_CASE("validate the fixture") {
    testing::TempDir t("cli");
    const auto r = run_cli({"validate", "--dataset", fx("fixture.csv"), "--out", t.path().string()});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("pairs: 58\n") != std::string::npos);
    CHECK(r.out.find("words: 12\n") != std::string::npos);
    CHECK(r.out.find("violations: 0\n") != std::string::npos);
    const auto j = json::parse(testing::read_file(t / "validation.json"));
    CHECK(j.at("stats").at("pairs") == 58);
    CHECK(std::filesystem::exists(t / "validate.manifest.json"));
  }

  TEST_CASE("validate reports violations with exit 1") {
    testing::TempDir t("cli");
    // Target word replaced on side b: more than two word edits.
    std::string body = testing::read_file(fx("fixture.csv"));
    body += "extra-1,banco,banco,es,Same,Vimos el banco roto ayer,roto,Vimos un coche viejo hoy,viejo,9,14,9,14\n";
    testing::write_file(t / "bad.csv", body);
    const auto r = run_cli({"validate", "--dataset", (t / "bad.csv").string()});
    CHECK(r.code == kExitValidation);
    CHECK(r.out.find("violations: 0") == std::string::npos);

    testing::write_file(t / "dup.csv", testing::read_file(fx("fixture.csv")) +
                                           testing::read_file(fx("fixture.csv")).substr(
                                               testing::read_file(fx("fixture.csv")).find('\n') + 1));
    CHECK(run_cli({"validate", "--dataset", (t / "dup.csv").string()}).code == kExitValidation);
  }

  TEST_CASE("assign-lists is reproducible") {
    testing::TempDir t("cli");
    const auto a = (t / "a").string(), b = (t / "b").string();
    REQUIRE(run_cli({"assign-lists", "--dataset", fx("fixture.csv"), "--n-lists", "4", "--seed",
                     "11", "--out", a})
                .code == kExitOk);
    REQUIRE(run_cli({"assign-lists", "--dataset", fx("fixture.csv"), "--n-lists", "4", "--seed",
                     "11", "--out", b})
                .code == kExitOk);
    CHECK(testing::tree_contents(a, ".manifest.json") == testing::tree_contents(b, ".manifest.json"));
    CHECK(run_cli({"assign-lists", "--dataset", fx("fixture.csv"), "--n-lists", "0", "--out",
                   (t / "c").string()})
              .code != kExitOk);
  }

  TEST_CASE("probe output is byte-identical across runs and thread counts") {
    testing::TempDir t("cli");
    const auto one = (t / "one").string(), again = (t / "again").string(),
               many = (t / "many").string();
    REQUIRE(run_cli(probe_args(one, "1")).code == kExitOk);
    REQUIRE(run_cli(probe_args(again, "1")).code == kExitOk);
    REQUIRE(run_cli(probe_args(many, "8")).code == kExitOk);
    const auto ref = testing::tree_contents(one, ".manifest.json");
    CHECK(ref.size() == 5);
    CHECK(ref == testing::tree_contents(again, ".manifest.json"));
    CHECK(ref == testing::tree_contents(many, ".manifest.json"));
  }

  TEST_CASE("report writes every analysis") {
    testing::TempDir t("cli");
    const auto out = (t / "r").string();
    const auto r = run_cli({"report", "--dataset", fx("fixture.csv"), "--summaries",
                            fx("pair_summaries.csv"), "--judgments", fx("judgments.jsonl"),
                            "--family-map", fx("family_map.csv"), "--params-map",
                            fx("params_map.csv"), "--dump", fx("fixture-base.jsonl"), "--dump",
                            fx("fixture-large.jsonl"), "--dump", fx("fixture-lite.jsonl"),
                            "--dump", fx("fixture-mini.jsonl"), "--out", out});
    REQUIRE(r.code == kExitOk);
    const auto m = json::parse(testing::read_file(std::filesystem::path(out) / "report.manifest.json"));
    for (const auto& name : m.at("outputs")) {
      CHECK(std::filesystem::exists(std::filesystem::path(out) / name.get<std::string>()));
    }
    CHECK(m.at("inputs").size() == 9);
  }

  TEST_CASE("exclusions and agreement on the fixture log") {
    testing::TempDir t("cli");
    const auto e = run_cli({"exclusions", "--judgments", fx("judgments.jsonl"), "--dataset",
                            fx("fixture.csv"), "--out", (t / "e").string()});
    CHECK(e.code == kExitOk);
    const auto a = run_cli({"agreement", "--judgments", fx("judgments.jsonl"), "--out",
                            (t / "a").string(), "--method", "pearson"});
    CHECK(a.code == kExitOk);
    CHECK(run_cli({"agreement", "--judgments", fx("judgments.jsonl"), "--out", (t / "b").string(),
                   "--method", "kendall"})
              .code == kExitUsage);
  }
}

TEST_SUITE("manifest") {
  TEST_CASE("sha256 of known strings") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    testing::TempDir t("manifest");
    testing::write_file(t / "x", "abc");
    CHECK(sha256_file(t / "x") == sha256_hex("abc"));
    CHECK_THROWS(sha256_file(t / "missing"));
  }

  TEST_CASE("output directory manifest") {
    testing::TempDir t("manifest");
    testing::write_file(t / "in.txt", "input");
    OutputDir dir(t / "out", "demo");
    dir.add_input((t / "in.txt").string());
    dir.set_seed(42);
    dir.write("a.csv", "x\n");
    dir.write("b.json", "{}");
    const auto path = dir.finish();
    CHECK(path.filename() == "demo.manifest.json");
    const auto j = json::parse(testing::read_file(path));
    CHECK(j.at("command") == "demo");
    CHECK(j.at("seed") == 42);
    CHECK(j.at("tool_version") == std::string(tool_version()));
    CHECK(j.at("outputs") == json::array({"a.csv", "b.json"}));
    CHECK(j.at("inputs").at(0).at("sha256") == sha256_hex("input"));
    CHECK(j.at("created_at").get<std::string>().size() >= 20);
    CHECK(testing::read_file(t / "out" / "a.csv") == "x\n");
  }
}
