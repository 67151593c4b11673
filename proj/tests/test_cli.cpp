#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "kitti_fixture.hpp"
#include "seqstrat/io.hpp"
#include "seqstrat/segmentation.hpp"

namespace fs = std::filesystem;
using namespace seqstrat;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output; // stdout only
};

RunResult run_cli(const std::string& args) {
  const std::string command = std::string(SEQSTRAT_BIN) + " " + args + " 2>/dev/null";
  FILE* pipe = ::popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult result;
  char buffer[4096];
  std::size_t n = 0;
  while ((n = std::fread(buffer, 1, sizeof buffer, pipe)) > 0)
    result.output.append(buffer, n);
  const int status = ::pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

struct Workspace {
  fs::path dir;
  Workspace() {
    dir = fs::temp_directory_path() /
          ("seqstrat_cli_" + std::to_string(::getpid()) + "_" +
           std::to_string(counter()++));
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
  static int& counter() {
    static int value = 0;
    return value;
  }
};

} // namespace

TEST_SUITE("cli") {

TEST_CASE("help exits 0, usage errors exit 2") {
  CHECK(run_cli("--help").exit_code == 0);
  CHECK(run_cli("ingest --help").exit_code == 0);
  CHECK(run_cli("--definitely-not-a-flag").exit_code == 2);
  CHECK(run_cli("split --method bogus").exit_code == 2);
  CHECK(run_cli("").exit_code == 2); // missing subcommand
}

TEST_CASE("domain errors exit 1") {
  CHECK(run_cli("ingest --root /nonexistent-dir --out /tmp/x.jsonl").exit_code == 1);
}

TEST_CASE("full pipeline composes on a synthesized fixture") {
  Workspace ws;
  const auto fixture = testutil::write_kitti_fixture(ws.dir / "data", 3, 6);

  // ingest
  CHECK(run_cli("ingest --root " + (ws.dir / "data").string() + " --out " +
                ws.path("manifest.jsonl") + " --bins 16 --jobs 2")
            .exit_code == 0);
  const auto manifest_file = read_manifest(ws.path("manifest.jsonl"));
  CHECK(manifest_file.manifest.scans.size() == fixture.scans.size());
  REQUIRE(manifest_file.provenance.has_value());
  CHECK((*manifest_file.provenance)["tool"] == "seqstrat");
  CHECK((*manifest_file.provenance)["config"]["bins"] == 16);

  // segment
  CHECK(run_cli("segment --manifest " + ws.path("manifest.jsonl") +
                " --granularity 2 --out " + ws.path("segments.jsonl"))
            .exit_code == 0);
  const auto segments_file = read_segments(ws.path("segments.jsonl"));
  CHECK(segments_file.segments.size() == 9); // 3 sequences of 6 scans at g=2

  // split
  CHECK(run_cli("split --segments " + ws.path("segments.jsonl") +
                " --method msegsss --ratios 0.5,0.5 --seed 7 --out " +
                ws.path("split.jsonl"))
            .exit_code == 0);
  const auto assignment = read_assignment(ws.path("split.jsonl"));
  CHECK(assignment.method == "msegsss");
  CHECK(assignment.granularity == "2");

  // evaluate to stdout
  const auto eval = run_cli("evaluate --split " + ws.path("split.jsonl") +
                            " --segments " + ws.path("segments.jsonl"));
  CHECK(eval.exit_code == 0);
  CHECK(eval.output.find("\"ld\":") != std::string::npos);

  // rank with a frozen test sequence
  CHECK(run_cli("rank --segments " + ws.path("segments.jsonl") +
                " --methods msss,random --n 3 --ratios 0.5,0.5 --seed-base 0 "
                "--frozen-test 02 --out " +
                ws.path("pool.jsonl") + " --winner-out " + ws.path("winner.jsonl"))
            .exit_code == 0);
  const auto winner = read_assignment(ws.path("winner.jsonl"));
  for (const auto& subset : winner.subsets)
    for (const std::uint32_t id : subset)
      CHECK(segments_file.segments.at(id).sequence_id != "02");

  // coreset
  CHECK(run_cli("coreset --manifest " + ws.path("manifest.jsonl") +
                " --labeled 0,1 --budget 4 --seed 5 --out " + ws.path("coreset.jsonl"))
            .exit_code == 0);

  // al-plan with scores
  {
    std::ofstream scores(ws.path("scores.txt"));
    for (std::size_t i = 0; i < fixture.scans.size(); ++i)
      scores << i << " " << (0.01 * static_cast<double>(i)) << "\n";
  }
  CHECK(run_cli("al-plan --manifest " + ws.path("manifest.jsonl") +
                " --labeled 0,1 --steps 2 --budget 3 --strategy score --scores " +
                ws.path("scores.txt") + " --subsample rss --m 8 --seed 9 --out " +
                ws.path("al.jsonl"))
            .exit_code == 0);
  const std::string al_text = read_text_file(ws.path("al.jsonl"));
  CHECK(al_text.find("\"step\":0") != std::string::npos);
  CHECK(al_text.find("\"step\":1") != std::string::npos);

  // no stray temp files from atomic writes
  for (const auto& entry : fs::directory_iterator(ws.dir))
    CHECK(entry.path().string().find(".tmp.") == std::string::npos);
}

TEST_CASE("evaluate on mismatched split/segments exits 1 with an error record") {
  Workspace ws;
  testutil::write_kitti_fixture(ws.dir / "data", 2, 4);
  REQUIRE(run_cli("ingest --root " + (ws.dir / "data").string() + " --out " +
                  ws.path("manifest.jsonl") + " --bins 8")
              .exit_code == 0);
  REQUIRE(run_cli("segment --manifest " + ws.path("manifest.jsonl") +
                  " --granularity 1 --out " + ws.path("g1.jsonl"))
              .exit_code == 0);
  REQUIRE(run_cli("segment --manifest " + ws.path("manifest.jsonl") +
                  " --granularity sequence --out " + ws.path("gseq.jsonl"))
              .exit_code == 0);
  REQUIRE(run_cli("split --segments " + ws.path("g1.jsonl") +
                  " --method random --ratios 0.5,0.5 --seed 1 --out " +
                  ws.path("split.jsonl"))
              .exit_code == 0);
  // The split references g=1 segment ids that do not exist at sequence level.
  CHECK(run_cli("evaluate --split " + ws.path("split.jsonl") + " --segments " +
                ws.path("gseq.jsonl"))
            .exit_code == 1);
}

TEST_CASE("randomized subcommands demand an explicit seed") {
  Workspace ws;
  CHECK(run_cli("split --segments x.jsonl --method random --ratios 0.5,0.5 --out y")
            .exit_code == 2);
  CHECK(run_cli("coreset --manifest x.jsonl --budget 3 --out y").exit_code == 2);
}

TEST_CASE("config file supplies defaults, flags override") {
  Workspace ws;
  testutil::write_kitti_fixture(ws.dir / "data", 2, 4);
  {
    std::ofstream config(ws.path("seqstrat.ini"));
    config << "[ingest]\nroot=" << (ws.dir / "data").string() << "\nbins=4\n";
  }
  CHECK(run_cli("--config " + ws.path("seqstrat.ini") + " ingest --out " +
                ws.path("m1.jsonl"))
            .exit_code == 0);
  CHECK(read_manifest(ws.path("m1.jsonl")).manifest.intensity_bins == 4);
  CHECK(run_cli("--config " + ws.path("seqstrat.ini") + " ingest --bins 8 --out " +
                ws.path("m2.jsonl"))
            .exit_code == 0);
  CHECK(read_manifest(ws.path("m2.jsonl")).manifest.intensity_bins == 8);
}

TEST_CASE("label map remaps during ingest") {
  Workspace ws;
  testutil::write_kitti_fixture(ws.dir / "data", 2, 3);
  {
    std::ofstream map(ws.path("map.txt"));
    map << "# collapse everything onto two targets\n";
    map << "10 1\n11 1\n12 2\n13 2\n";
    map << "name 1 near\nname 2 far\n";
  }
  REQUIRE(run_cli("ingest --root " + (ws.dir / "data").string() + " --out " +
                  ws.path("m.jsonl") + " --bins 8 --label-map " + ws.path("map.txt"))
              .exit_code == 0);
  const auto manifest = read_manifest(ws.path("m.jsonl")).manifest;
  CHECK(manifest.label_dictionary ==
        std::map<LabelId, std::string>{{1, "near"}, {2, "far"}});
  for (const auto& scan : manifest.scans)
    for (const auto& [label, count] : scan.label_counts) CHECK(label <= 2);
}

} // TEST_SUITE
