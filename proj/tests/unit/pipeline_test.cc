#include <cstdlib>
#include <filesystem>

#include <gtest/gtest.h>

#include "egofields/colmap_text.h"
#include "egofields/error.h"
#include "egofields/io_util.h"
#include "egofields/pipeline.h"
#include "egofields/subprocess.h"
#include "support/mock_backend.h"

namespace fs = std::filesystem;

namespace egofields {
namespace {

fs::path fresh_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  return p;
}

MemoryFrameSource blank_frames(std::size_t n) {
  return MemoryFrameSource(std::vector<cv::Mat>(n, cv::Mat(64, 64, CV_8U, cv::Scalar(0))));
}

// Keeps every tenth frame; the real filter is covered elsewhere.
FilterStep every_tenth(std::size_t n, std::vector<double>* thresholds = nullptr) {
  return [n, thresholds](double t) {
    if (thresholds) thresholds->push_back(t);
    return compare_uniform(n, n / 10);
  };
}

TEST(Verify, BoundaryIsInclusive) {
  EXPECT_TRUE(verify_counts(70, 100).accept);
  EXPECT_FALSE(verify_counts(69, 100).accept);
  const VerifyResult all = verify_counts(100, 100);
  EXPECT_TRUE(all.accept);
  EXPECT_DOUBLE_EQ(all.registration_rate, 1.0);
  EXPECT_DOUBLE_EQ(verify_counts(70, 100).registration_rate, 0.7);
}

TEST(Verify, MonotoneInRegisteredCount) {
  bool seen_accept = false;
  for (std::size_t k = 0; k <= 1000; ++k) {
    const bool a = verify_counts(k, 1000).accept;
    if (seen_accept) EXPECT_TRUE(a);
    seen_accept = seen_accept || a;
    EXPECT_EQ(a, k >= 700) << k;
  }
}

TEST(Verify, UsesReconstructionTotals) {
  Reconstruction r;
  r.intrinsics.emplace(1, CameraIntrinsics::simple_pinhole(10, 10, 5, 5, 5));
  for (int i = 0; i < 7; ++i) {
    RegisteredFrame f;
    f.name = std::to_string(i);
    r.frames.push_back(f);
  }
  r.total_frame_count = 10;
  EXPECT_TRUE(verify(r).accept);
  r.total_frame_count = 11;
  EXPECT_FALSE(verify(r).accept);
  r.total_frame_count = 0;
  EXPECT_THROW(verify(r), InvalidArgument);
  EXPECT_THROW(verify_counts(1, 1, VerifyConfig{0.0}), InvalidArgument);
}

TEST(StateMachine, ExhaustiveRatesAndAttempts) {
  const double rates[] = {0.69, 0.70, 0.71};
  for (double r1 : rates) {
    for (double r2 : rates) {
      PipelineState s = start_pipeline(0.9);
      s = advance(s, Stage::kSparseDone);
      s = advance(s, Stage::kDenseDone);
      const Stage v1 = verdict(s, verify_counts(static_cast<std::size_t>(r1 * 100 + 0.5), 100));
      if (r1 >= 0.70) {
        EXPECT_EQ(v1, Stage::kAccepted);
        s = advance(s, v1, std::nullopt, r1);
        EXPECT_EQ(s.attempt, 1);
        EXPECT_EQ(s.thresholds, std::vector<double>{0.9});
        EXPECT_TRUE(s.terminal());
        continue;
      }
      ASSERT_EQ(v1, Stage::kRefiltered);
      s = advance(s, v1, 0.95, r1);
      EXPECT_EQ(s.label(), "refiltered@0.95");
      EXPECT_EQ(s.attempt, 2);
      s = advance(s, Stage::kSparseDone);
      s = advance(s, Stage::kDenseDone);
      const Stage v2 = verdict(s, verify_counts(static_cast<std::size_t>(r2 * 100 + 0.5), 100));
      EXPECT_EQ(v2, r2 >= 0.70 ? Stage::kAccepted : Stage::kRejected);
      s = advance(s, v2, std::nullopt, r2);
      EXPECT_TRUE(s.terminal());
      EXPECT_EQ(s.thresholds, (std::vector<double>{0.9, 0.95}));
      EXPECT_DOUBLE_EQ(s.registration_rate, r2);
      // A finished pipeline never starts a third attempt.
      EXPECT_THROW(advance(s, Stage::kRefiltered, 0.99), InvalidArgument);
      EXPECT_THROW(advance(s, Stage::kSparseDone), InvalidArgument);
    }
  }
}

TEST(StateMachine, IllegalTransitionsThrow) {
  const PipelineState s = start_pipeline(0.9);
  EXPECT_EQ(s.label(), "filtered@0.90");
  EXPECT_THROW(advance(s, Stage::kDenseDone), InvalidArgument);
  EXPECT_THROW(advance(s, Stage::kAccepted), InvalidArgument);
  EXPECT_THROW(advance(s, Stage::kRejected), InvalidArgument);
  EXPECT_THROW(verdict(s, verify_counts(1, 1)), InvalidArgument);
  PipelineState d = advance(advance(s, Stage::kSparseDone), Stage::kDenseDone);
  // Rejection is only reachable on the second attempt.
  EXPECT_THROW(advance(d, Stage::kRejected), InvalidArgument);
  EXPECT_THROW(advance(d, Stage::kRefiltered), InvalidArgument);  // needs a threshold
}

TEST(StateMachine, JsonRoundTrip) {
  PipelineState s = start_pipeline(0.9);
  s = advance(s, Stage::kSparseDone);
  s = advance(s, Stage::kDenseDone);
  s = advance(s, Stage::kRefiltered, 0.95, 0.6);
  const PipelineState t = parse_state_json(format_state_json(s));
  EXPECT_EQ(t.stage, s.stage);
  EXPECT_EQ(t.attempt, 2);
  EXPECT_EQ(t.thresholds, s.thresholds);
  EXPECT_DOUBLE_EQ(t.registration_rate, 0.6);
  ASSERT_EQ(t.history.size(), s.history.size());
  EXPECT_EQ(format_state_json(t), format_state_json(s));
  for (Stage st : {Stage::kFiltered, Stage::kSparseDone, Stage::kDenseDone, Stage::kAccepted,
                   Stage::kRefiltered, Stage::kRejected}) {
    EXPECT_EQ(parse_stage(stage_name(st)), st);
  }
  EXPECT_THROW(parse_stage("bogus"), InvalidArgument);
}

TEST(Orchestrate, AcceptedOnFirstAttempt) {
  const auto frames = blank_frames(100);
  testing::ScriptedBackend backend({0.95});
  OrchestrateConfig cfg;
  cfg.workdir = fresh_dir("egofields_orch_accept");
  const auto out = orchestrate(frames, backend, cfg, every_tenth(100));
  EXPECT_EQ(out.state.stage, Stage::kAccepted);
  EXPECT_EQ(out.state.attempt, 1);
  EXPECT_DOUBLE_EQ(out.state.registration_rate, 0.95);
  EXPECT_EQ(out.recon.registered_count(), 95u);
  EXPECT_EQ(backend.kept_per_call.at(0).size(), 10u);
  EXPECT_TRUE(fs::exists(cfg.workdir / "state.json"));
  EXPECT_TRUE(fs::exists(cfg.workdir / "attempt1" / "kept.txt"));
  EXPECT_TRUE(fs::exists(cfg.workdir / "attempt1" / "dense" / "images.txt"));
  fs::remove_all(cfg.workdir);
}

TEST(Orchestrate, AcceptedAfterRestart) {
  const auto frames = blank_frames(100);
  testing::ScriptedBackend backend({0.60, 0.75});
  OrchestrateConfig cfg;
  cfg.workdir = fresh_dir("egofields_orch_restart");
  std::vector<double> thresholds;
  const auto out = orchestrate(frames, backend, cfg, every_tenth(100, &thresholds));
  EXPECT_EQ(out.state.stage, Stage::kAccepted);
  EXPECT_EQ(out.state.attempt, 2);
  EXPECT_EQ(out.state.thresholds, (std::vector<double>{0.90, 0.95}));
  EXPECT_EQ(thresholds, (std::vector<double>{0.90, 0.95}));
  EXPECT_DOUBLE_EQ(out.state.registration_rate, 0.75);
  EXPECT_EQ(backend.sparse_calls, 2);
  fs::remove_all(cfg.workdir);
}

TEST(Orchestrate, RejectedAfterTwoFailures) {
  const auto frames = blank_frames(100);
  testing::ScriptedBackend backend({0.60, 0.60});
  OrchestrateConfig cfg;
  cfg.workdir = fresh_dir("egofields_orch_reject");
  const auto out = orchestrate(frames, backend, cfg, every_tenth(100));
  EXPECT_EQ(out.state.stage, Stage::kRejected);
  EXPECT_EQ(out.state.attempt, 2);
  EXPECT_EQ(backend.sparse_calls, 2);
  EXPECT_EQ(backend.register_calls, 2);
  fs::remove_all(cfg.workdir);
}

TEST(Orchestrate, ResumesAfterFailedStage) {
  const auto frames = blank_frames(50);
  testing::ScriptedBackend backend({0.9});
  backend.fail_register_calls = 1;
  OrchestrateConfig cfg;
  cfg.workdir = fresh_dir("egofields_orch_resume");
  EXPECT_THROW(orchestrate(frames, backend, cfg, every_tenth(50)), ExternalToolError);
  const PipelineState mid = parse_state_json(read_text_file(cfg.workdir / "state.json"));
  EXPECT_EQ(mid.stage, Stage::kSparseDone);
  int filter_calls = 0;
  const auto out = orchestrate(frames, backend, cfg, [&](double t) {
    ++filter_calls;
    return every_tenth(50)(t);
  });
  EXPECT_EQ(out.state.stage, Stage::kAccepted);
  EXPECT_EQ(backend.sparse_calls, 1);  // not repeated
  EXPECT_EQ(filter_calls, 0);
  // A finished run is a no-op when invoked again.
  const auto again = orchestrate(frames, backend, cfg, every_tenth(50));
  EXPECT_EQ(again.state.stage, Stage::kAccepted);
  EXPECT_EQ(backend.register_calls, 2);
  fs::remove_all(cfg.workdir);
}

TEST(Orchestrate, RealFilterOnIdenticalFrames) {
  const auto frames = blank_frames(20);
  testing::ScriptedBackend backend({1.0});
  OrchestrateConfig cfg;
  cfg.workdir = fresh_dir("egofields_orch_realfilter");
  const auto out = orchestrate(frames, backend, cfg);
  ASSERT_EQ(out.filters.size(), 1u);
  // Featureless frames never match, so every frame is its own window.
  EXPECT_EQ(out.filters[0].kept.size(), 20u);
  fs::remove_all(cfg.workdir);
}

TEST(Subprocess, ExpandQuotesValues) {
  EXPECT_EQ(shell_quote("a b"), "'a b'");
  EXPECT_EQ(shell_quote("it's"), "'it'\\''s'");
  EXPECT_EQ(expand_command("run {image_dir} -o {output_dir}",
                           {{"image_dir", "/x y"}, {"output_dir", "/o"}}),
            "run '/x y' -o '/o'");
  EXPECT_THROW(expand_command("run {nope}", {{"image_dir", "a"}}), InvalidArgument);
}

TEST(Subprocess, CapturesOutputAndFailures) {
  const auto dir = fresh_dir("egofields_subprocess");
  const auto ok = run_command("echo hello; echo oops >&2", std::chrono::seconds(10), dir / "ok");
  EXPECT_EQ(ok.exit_code, 0);
  EXPECT_EQ(ok.stdout_text, "hello\n");
  EXPECT_EQ(read_text_file(dir / "ok.stderr"), "oops\n");
  try {
    run_command("echo bad >&2; exit 4", std::chrono::seconds(10), dir / "bad");
    FAIL() << "expected ExternalToolError";
  } catch (const ExternalToolError& e) {
    EXPECT_EQ(e.exit_code(), 4);
    EXPECT_EQ(e.stderr_text(), "bad\n");
  }
  const auto start = std::chrono::steady_clock::now();
  EXPECT_THROW(run_command("sleep 30", std::chrono::seconds(1), dir / "slow"), ExternalToolError);
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(10));
  fs::remove_all(dir);
}

TEST(Workdir, EnvironmentOverride) {
  ::unsetenv("EGOFIELDS_WORKDIR");
  EXPECT_EQ(resolve_workdir("/fallback"), fs::path("/fallback"));
  ::setenv("EGOFIELDS_WORKDIR", "/scratch/x", 1);
  EXPECT_EQ(resolve_workdir("/fallback"), fs::path("/scratch/x"));
  ::unsetenv("EGOFIELDS_WORKDIR");
}

SfmCommands mock_commands(const std::string& rates, const std::string& extra = "") {
  const std::string tool = MOCK_SFM_PATH;
  SfmCommands c;
  c.sfm_cmd = tool + " sparse --images {image_dir} --output {output_dir}" + extra;
  c.register_cmd = tool +
                   " register --images {image_dir} --input {input_model} --output {output_dir}"
                   " --attempt {attempt} --rates " + rates;
  c.timeout = std::chrono::seconds(60);
  return c;
}

TEST(ExternalBackend, MockToolRestartThenAccept) {
  const auto frames = blank_frames(40);
  ExternalSfmBackend backend(mock_commands("0.6,0.75"));
  OrchestrateConfig cfg;
  cfg.workdir = fresh_dir("egofields_external_mock");
  const auto out = orchestrate(frames, backend, cfg, every_tenth(40));
  EXPECT_EQ(out.state.stage, Stage::kAccepted);
  EXPECT_EQ(out.state.attempt, 2);
  EXPECT_EQ(out.recon.registered_count(), 30u);
  EXPECT_TRUE(fs::exists(cfg.workdir / "attempt2" / "logs" / "register.stdout"));
  EXPECT_EQ(std::distance(fs::directory_iterator(cfg.workdir / "all_images"), {}), 40);
  fs::remove_all(cfg.workdir);
}

TEST(ExternalBackend, ToolFailureCarriesStderr) {
  const auto frames = blank_frames(10);
  ExternalSfmBackend backend(mock_commands("1.0", " --fail"));
  OrchestrateConfig cfg;
  cfg.workdir = fresh_dir("egofields_external_fail");
  try {
    orchestrate(frames, backend, cfg, every_tenth(10));
    FAIL() << "expected ExternalToolError";
  } catch (const ExternalToolError& e) {
    EXPECT_EQ(e.exit_code(), 3);
    EXPECT_NE(e.stderr_text().find("simulated failure"), std::string::npos);
  }
  EXPECT_EQ(parse_state_json(read_text_file(cfg.workdir / "state.json")).stage, Stage::kFiltered);
  fs::remove_all(cfg.workdir);
}

TEST(ExternalBackend, StageTimeout) {
  const auto frames = blank_frames(10);
  SfmCommands c = mock_commands("1.0", " --sleep 20");
  c.timeout = std::chrono::seconds(1);
  ExternalSfmBackend backend(c);
  OrchestrateConfig cfg;
  cfg.workdir = fresh_dir("egofields_external_timeout");
  EXPECT_THROW(orchestrate(frames, backend, cfg, every_tenth(10)), ExternalToolError);
  fs::remove_all(cfg.workdir);
}

}  // namespace
}  // namespace egofields
