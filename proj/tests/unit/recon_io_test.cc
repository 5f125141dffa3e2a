#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "egofields/colmap_text.h"
#include "egofields/epic_fields_json.h"
#include "egofields/error.h"
#include "egofields/io_util.h"
#include "support/random_models.h"

namespace fs = std::filesystem;

namespace egofields {
namespace {

class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / name) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void write(const fs::path& p, const std::string& s) {
  std::ofstream(p) << s;
}

void write_fixture(const fs::path& dir, const std::string& images_extra = "") {
  write(dir / "cameras.txt",
        "# Camera list with one line of data per camera:\n"
        "1 SIMPLE_RADIAL 456 256 300.5 228 128 0.0125\n");
  write(dir / "images.txt",
        "# Image list with two lines of data per image:\n"
        "1 1 0 0 0 0.5 -0.25 2 1 P01_01/frame_0000000001.jpg\n"
        "100.5 50.25 7 12 13 -1\n"
        "2 0.7071067811865476 0 0.7071067811865476 0 1 2 3 1 P01_01/frame_0000000002.jpg\n"
        "110 60 7\n" +
            images_extra);
  write(dir / "points3D.txt",
        "# 3D point list\n"
        "7 1.5 -2 3.25 255 128 0 0.75 1 0 2 0\n");
}

void expect_equivalent(const Reconstruction& a, const Reconstruction& b, double tol) {
  ASSERT_EQ(a.intrinsics.size(), b.intrinsics.size());
  for (const auto& [id, cam] : a.intrinsics) {
    const auto& other = b.intrinsics.at(id);
    EXPECT_EQ(cam.model(), other.model());
    EXPECT_EQ(cam.width(), other.width());
    for (std::size_t i = 0; i < cam.params().size(); ++i) {
      EXPECT_NEAR(cam.params()[i], other.params()[i], tol);
    }
  }
  ASSERT_EQ(a.frames.size(), b.frames.size());
  for (const auto& f : a.frames) {
    const RegisteredFrame* g = b.find_frame(f.name);
    ASSERT_NE(g, nullptr) << f.name;
    EXPECT_EQ(f.image_id, g->image_id);
    EXPECT_EQ(f.camera_id, g->camera_id);
    EXPECT_LT((f.pose.rotation().coeffs() - g->pose.rotation().coeffs()).norm(), tol);
    EXPECT_LT((f.pose.translation() - g->pose.translation()).norm(), tol);
    ASSERT_EQ(f.points2d.size(), g->points2d.size());
    for (std::size_t k = 0; k < f.points2d.size(); ++k) {
      EXPECT_LT((f.points2d[k].xy - g->points2d[k].xy).norm(), tol);
      EXPECT_EQ(f.points2d[k].point_id, g->points2d[k].point_id);
    }
  }
  ASSERT_EQ(a.points.size(), b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    const auto& p = a.points[i];
    auto it = std::find_if(b.points.begin(), b.points.end(),
                           [&](const SparsePoint& q) { return q.id == p.id; });
    ASSERT_NE(it, b.points.end());
    EXPECT_LT((p.position - it->position).norm(), tol);
    EXPECT_NEAR(p.error, it->error, tol);
    EXPECT_EQ(p.color.has_value(), it->color.has_value());
    ASSERT_EQ(p.track.size(), it->track.size());
  }
}

TEST(ColmapText, HandWrittenFixture) {
  TempDir dir("egofields_colmap_fixture");
  write_fixture(dir.path());
  const Reconstruction r = read_colmap_text(dir.path());
  EXPECT_EQ(r.intrinsics.size(), 1u);
  EXPECT_EQ(r.frames.size(), 2u);
  EXPECT_EQ(r.points.size(), 1u);
  const auto& cam = r.intrinsics.at(1);
  EXPECT_EQ(cam.model(), CameraModel::kSimpleRadial);
  EXPECT_EQ(cam.width(), 456);
  EXPECT_DOUBLE_EQ(cam.params()[0], 300.5);
  EXPECT_DOUBLE_EQ(cam.params()[3], 0.0125);
  const RegisteredFrame* f1 = r.find_frame("P01_01/frame_0000000001.jpg");
  ASSERT_NE(f1, nullptr);
  EXPECT_EQ(f1->image_id, 1u);
  EXPECT_DOUBLE_EQ(f1->pose.translation().y(), -0.25);
  ASSERT_EQ(f1->points2d.size(), 2u);
  EXPECT_EQ(f1->points2d[0].point_id, std::optional<PointId>(7));
  EXPECT_FALSE(f1->points2d[1].point_id.has_value());  // -1: no track
  EXPECT_DOUBLE_EQ(f1->points2d[1].xy.x(), 12.0);
  const SparsePoint& p = r.points[0];
  EXPECT_EQ(p.id, 7u);
  EXPECT_DOUBLE_EQ(p.position.z(), 3.25);
  ASSERT_TRUE(p.color.has_value());
  EXPECT_EQ(p.color->r, 255);
  EXPECT_DOUBLE_EQ(p.error, 0.75);
  ASSERT_EQ(p.track.size(), 2u);
  EXPECT_EQ(p.track[1].frame, "P01_01/frame_0000000002.jpg");
  EXPECT_EQ(r.total_frame_count, 2u);
  EXPECT_NO_THROW(r.validate());
}

TEST(ColmapText, ImageWithoutObservationsHasEmptyLine) {
  TempDir dir("egofields_colmap_emptyline");
  write_fixture(dir.path(), "3 1 0 0 0 0 0 0 1 lonely.jpg\n\n");
  const Reconstruction r = read_colmap_text(dir.path());
  ASSERT_EQ(r.frames.size(), 3u);
  EXPECT_TRUE(r.find_frame("lonely.jpg")->points2d.empty());
}

TEST(ColmapText, NamesMayContainSpaces) {
  TempDir dir("egofields_colmap_spaces");
  write_fixture(dir.path(), "3 1 0 0 0 0 0 0 1 my frame.jpg\n\n");
  EXPECT_NE(read_colmap_text(dir.path()).find_frame("my frame.jpg"), nullptr);
}

TEST(ColmapText, UnknownModelRejected) {
  TempDir dir("egofields_colmap_model");
  write_fixture(dir.path());
  write(dir.path() / "cameras.txt", "1 FISHEYE_MAGIC 456 256 1 2 3\n");
  EXPECT_THROW(read_colmap_text(dir.path()), UnsupportedCameraModel);
}

TEST(ColmapText, MalformedLineReportsLineNumber) {
  TempDir dir("egofields_colmap_malformed");
  write_fixture(dir.path());
  write(dir.path() / "points3D.txt", "# header\n\n7 1.5 -2 oops 255 128 0 0.75 1 0 2 0\n");
  try {
    read_colmap_text(dir.path());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(ColmapText, DanglingReferencesRejected) {
  TempDir dir("egofields_colmap_dangling");
  write_fixture(dir.path());
  write(dir.path() / "points3D.txt", "7 1.5 -2 3 255 128 0 0.75 1 0 9 0\n");
  EXPECT_THROW(read_colmap_text(dir.path()), ParseError);
  write_fixture(dir.path());
  write(dir.path() / "cameras.txt", "2 PINHOLE 456 256 300 300 228 128\n");
  EXPECT_THROW(read_colmap_text(dir.path()), ParseError);
}

TEST(ColmapText, MissingFileIsAnError) {
  TempDir dir("egofields_colmap_missing");
  EXPECT_THROW(read_colmap_text(dir.path()), Error);
}

TEST(ColmapText, WriterIsByteStable) {
  TempDir dir("egofields_colmap_stable");
  write_fixture(dir.path());
  const Reconstruction r = read_colmap_text(dir.path());
  const auto once = dir.path() / "once";
  const auto twice = dir.path() / "twice";
  write_colmap_text(r, once);
  write_colmap_text(read_colmap_text(once), twice);
  for (const char* f : {"cameras.txt", "images.txt", "points3D.txt"}) {
    EXPECT_EQ(read_text_file(once / f), read_text_file(twice / f)) << f;
  }
}

TEST(ColmapText, RandomRoundTrips) {
  TempDir dir("egofields_colmap_random");
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    const Reconstruction r =
        testing::random_reconstruction(rng, 3 + static_cast<int>(seed % 5), 10 + static_cast<int>(seed % 17),
                                       1 + static_cast<int>(seed % 3));
    ASSERT_NO_THROW(r.validate());
    write_colmap_text(r, dir.path() / "m");
    const Reconstruction back = read_colmap_text(dir.path() / "m");
    expect_equivalent(r, back, 1e-9);
  }
}

TEST(EpicJson, RoundTripAndSortedNames) {
  TempDir dir("egofields_json_roundtrip");
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    const Reconstruction r = testing::random_reconstruction(rng, 5, 12, 1);
    const auto path = dir.path() / "model.json";
    write_epic_fields_json(r, path);
    const Reconstruction back = read_epic_fields_json(path);
    ASSERT_EQ(back.frames.size(), r.frames.size());
    for (std::size_t i = 1; i < back.frames.size(); ++i) {
      EXPECT_LT(back.frames[i - 1].name, back.frames[i].name);
    }
    for (const auto& f : r.frames) {
      const RegisteredFrame* g = back.find_frame(f.name);
      ASSERT_NE(g, nullptr);
      EXPECT_LT((f.pose.rotation().coeffs() - g->pose.rotation().coeffs()).norm(), 1e-9);
      EXPECT_LT((f.pose.translation() - g->pose.translation()).norm(), 1e-9);
    }
    ASSERT_EQ(back.points.size(), r.points.size());
    for (std::size_t i = 0; i < r.points.size(); ++i) {
      EXPECT_LT((back.points[i].position - r.points[i].position).norm(), 1e-9);
    }
    const auto p0 = r.intrinsics.begin()->second.params();
    const auto p1 = back.intrinsics.at(1).params();
    for (std::size_t i = 0; i < p0.size(); ++i) EXPECT_NEAR(p0[i], p1[i], 1e-9);
  }
}

TEST(EpicJson, NonUnitQuaternionRejectedWithPath) {
  const std::string text = R"({"camera": {"model": "PINHOLE", "width": 456, "height": 256,
      "params": [300, 300, 228, 128]},
      "images": {"a.jpg": [1.00001, 0, 0, 0, 0, 0, 0]}, "points": []})";
  try {
    parse_epic_fields_json(text);
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.path(), "/images/a.jpg");
  }
  const std::string ok = R"({"camera": {"model": "PINHOLE", "width": 456, "height": 256,
      "params": [300, 300, 228, 128]},
      "images": {"a.jpg": [1.0000001, 0, 0, 0, 0, 0, 0]}, "points": [[1, 2, 3]]})";
  EXPECT_EQ(parse_epic_fields_json(ok).frames.size(), 1u);
}

TEST(EpicJson, SchemaViolationsCarryPaths) {
  auto path_of = [](const std::string& text) {
    try {
      parse_epic_fields_json(text);
    } catch (const SchemaError& e) {
      return e.path();
    }
    return std::string("<no error>");
  };
  EXPECT_EQ(path_of(R"({"images": {}, "points": []})"), "/camera");
  EXPECT_EQ(path_of(R"({"camera": {"model": "PINHOLE", "width": 456, "height": 256,
      "params": [300, 300, 228, 128]}, "images": {}, "points": [[1, 2]]})"),
            "/points/0");
  EXPECT_EQ(path_of("not json"), "");
}

TEST(EpicJson, MultipleCamerasCannotBeWritten) {
  std::mt19937_64 rng(3);
  const Reconstruction r = testing::random_reconstruction(rng, 4, 5, 2);
  EXPECT_THROW(format_epic_fields_json(r), InvalidArgument);
}

TEST(CrossFormat, ColmapToJsonPreservesPosesExactly) {
  TempDir dir("egofields_cross_format");
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed + 500);
    const Reconstruction r = testing::random_reconstruction(rng, 6, 20, 1);
    write_colmap_text(r, dir.path() / "colmap");
    const Reconstruction from_text = read_colmap_text(dir.path() / "colmap");
    write_epic_fields_json(from_text, dir.path() / "model.json");
    const Reconstruction from_json = read_epic_fields_json(dir.path() / "model.json");
    for (const auto& f : from_text.frames) {
      const RegisteredFrame* g = from_json.find_frame(f.name);
      ASSERT_NE(g, nullptr);
      EXPECT_EQ(f.pose.rotation().coeffs(), g->pose.rotation().coeffs());
      EXPECT_EQ(f.pose.translation(), g->pose.translation());
    }
  }
}

TEST(AtomicWrite, ReplacesContent) {
  TempDir dir("egofields_atomic");
  atomic_write(dir.path() / "f.txt", "one");
  atomic_write(dir.path() / "f.txt", "two");
  EXPECT_EQ(read_text_file(dir.path() / "f.txt"), "two");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path())) ++entries;
  EXPECT_EQ(entries, 1u);
}

}  // namespace
}  // namespace egofields
