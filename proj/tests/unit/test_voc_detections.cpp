#include <gtest/gtest.h>

#include "cadsynth/detections.hpp"
#include "cadsynth/error.hpp"
#include "cadsynth/io.hpp"
#include "cadsynth/rng.hpp"
#include "cadsynth/voc.hpp"
#include "oracles/regex_voc.hpp"
#include "support/fixtures.hpp"

namespace cadsynth {
namespace {

constexpr const char* kLabelImgFile = R"(<annotation>
	<folder>test</folder>
	<filename> IMG_0042.jpg </filename>
	<path>/data/test/IMG_0042.jpg</path>
	<source>
		<database>Unknown</database>
	</source>
	<size>
		<width>1080</width>
		<height>720</height>
		<depth>3</depth>
	</size>
	<segmented>0</segmented>
	<object>
		<name>yamaha</name>
		<pose>Unspecified</pose>
		<truncated>0</truncated>
		<difficult>0</difficult>
		<bndbox>
			<xmin>412</xmin>
			<ymin>233</ymin>
			<xmax>655</xmax>
			<ymax>540</ymax>
		</bndbox>
	</object>
	<object>
		<name>adblue</name>
		<pose>Unspecified</pose>
		<truncated>1</truncated>
		<difficult>1</difficult>
		<bndbox>
			<xmin>1</xmin>
			<ymin>1</ymin>
			<xmax>80</xmax>
			<ymax>60</ymax>
		</bndbox>
	</object>
</annotation>
)";

TEST(Voc, ReferenceFileMatchesRegexReader) {
  const Annotation a = parse_voc_xml(kLabelImgFile);
  const oracle::VocFile ref = oracle::read_voc_regex(kLabelImgFile);
  EXPECT_EQ(a.filename, ref.filename);
  EXPECT_EQ(a.filename, "IMG_0042.jpg");
  EXPECT_EQ(a.width, ref.width);
  EXPECT_EQ(a.height, ref.height);
  EXPECT_EQ(a.depth, ref.depth);
  ASSERT_EQ(a.objects.size(), ref.objects.size());
  for (std::size_t i = 0; i < a.objects.size(); ++i) {
    EXPECT_EQ(a.objects[i].name, ref.objects[i].name);
    EXPECT_EQ(a.objects[i].difficult, ref.objects[i].difficult);
    EXPECT_EQ(a.objects[i].box, (BBox{ref.objects[i].xmin - 1, ref.objects[i].ymin - 1, ref.objects[i].xmax,
                                      ref.objects[i].ymax}));
  }
  EXPECT_EQ(a.objects[0].box, (BBox{411, 232, 655, 540}));
}

TEST(Voc, BoxConventionExamples) {
  Annotation a{"img.png", 640, 480, 3, {{"target", {0, 0, 640, 480}, false}}};
  oracle::VocFile f = oracle::read_voc_regex(write_voc_xml(a));
  EXPECT_EQ(f.objects[0].xmin, 1);
  EXPECT_EQ(f.objects[0].ymin, 1);
  EXPECT_EQ(f.objects[0].xmax, 640);
  EXPECT_EQ(f.objects[0].ymax, 480);

  a.objects[0].box = {3, 7, 4, 8};
  f = oracle::read_voc_regex(write_voc_xml(a));
  EXPECT_EQ(f.objects[0].xmin, 4);
  EXPECT_EQ(f.objects[0].ymin, 8);
  EXPECT_EQ(f.objects[0].xmax, 4);
  EXPECT_EQ(f.objects[0].ymax, 8);
}

TEST(Voc, WriterOutputShape) {
  const Annotation a{"a&b<c>.png", 64, 48, 3, {{"o\"k'", {1, 2, 3, 4}, true}}};
  const std::string xml = write_voc_xml(a);
  EXPECT_EQ(xml.rfind("<annotation>", 0), 0u);
  EXPECT_NE(xml.find("a&amp;b&lt;c&gt;.png"), std::string::npos);
  EXPECT_EQ(oracle::read_voc_regex(xml).filename, a.filename);
  EXPECT_EQ(parse_voc_xml(xml), a);
}

Annotation random_annotation(Rng& rng) {
  static const std::string alphabet = "abcXYZ019_-. &<>\"'";
  auto word = [&] {
    std::string s(1, 'a' + static_cast<char>(rng.uniform_int(0, 25)));
    const int n = static_cast<int>(rng.uniform_int(0, 10));
    for (int i = 0; i < n; ++i) s += alphabet[rng.uniform_int(0, static_cast<std::int64_t>(alphabet.size()) - 1)];
    return s + static_cast<char>('a' + rng.uniform_int(0, 25));
  };
  Annotation a;
  a.filename = word() + ".png";
  a.width = static_cast<int>(rng.uniform_int(1, 2000));
  a.height = static_cast<int>(rng.uniform_int(1, 2000));
  a.depth = static_cast<int>(rng.uniform_int(1, 4));
  const int n = static_cast<int>(rng.uniform_int(0, 6));
  for (int i = 0; i < n; ++i) {
    const int x0 = static_cast<int>(rng.uniform_int(0, a.width - 1));
    const int y0 = static_cast<int>(rng.uniform_int(0, a.height - 1));
    a.objects.push_back({word(),
                         {x0, y0, static_cast<int>(rng.uniform_int(x0 + 1, a.width)),
                          static_cast<int>(rng.uniform_int(y0 + 1, a.height))},
                         rng.bernoulli(0.3)});
  }
  return a;
}

TEST(Voc, RandomRoundTrip) {
  Rng rng(17);
  for (int i = 0; i < 300; ++i) {
    const Annotation a = random_annotation(rng);
    ASSERT_EQ(parse_voc_xml(write_voc_xml(a)), a) << write_voc_xml(a);
  }
}

TEST(Voc, MalformedInputs) {
  const std::string good = write_voc_xml({"x.png", 64, 48, 3, {{"t", {1, 1, 9, 9}, false}}});
  auto replace = [&](const std::string& from, const std::string& to) {
    std::string s = good;
    s.replace(s.find(from), from.size(), to);
    return s;
  };
  std::string inverted = replace("<xmin>2</xmin>", "<xmin>10</xmin>");
  inverted.replace(inverted.find("<xmax>9</xmax>"), 14, "<xmax>5</xmax>");
  EXPECT_THROW(parse_voc_xml(inverted), MalformedAnnotation);
  EXPECT_THROW(parse_voc_xml(replace("<xmin>2</xmin>", "<xmin>10</xmin>")), MalformedAnnotation);
  const auto s0 = good.find("\t<size>"), s1 = good.find("</size>\n") + 8;
  EXPECT_THROW(parse_voc_xml(good.substr(0, s0) + good.substr(s1)), MalformedAnnotation);
  EXPECT_THROW(parse_voc_xml(replace("<filename>x.png</filename>", "")), MalformedAnnotation);
  EXPECT_THROW(parse_voc_xml(replace("<xmax>9</xmax>", "<xmax>65</xmax>")), MalformedAnnotation);
  EXPECT_THROW(parse_voc_xml(replace("<ymin>2</ymin>", "<ymin>two</ymin>")), MalformedAnnotation);
  EXPECT_THROW(parse_voc_xml(replace("<difficult>0</difficult>", "<difficult>2</difficult>")), MalformedAnnotation);
  EXPECT_THROW(parse_voc_xml("<annotation><filename>"), MalformedAnnotation);
  EXPECT_THROW(parse_voc_xml("<other/>"), MalformedAnnotation);
  EXPECT_NO_THROW(parse_voc_xml(replace("<difficult>0</difficult>", "")));
}

TEST(Voc, LoadGroundTruth) {
  testing::TempDir dir("gt");
  EXPECT_THROW(load_ground_truth(dir / "missing"), IoFailure);
  EXPECT_THROW(load_ground_truth(dir.path()), MalformedAnnotation);
  std::filesystem::create_directories(dir / "annotations");
  write_file(dir / "annotations" / "b.xml", std::string_view(write_voc_xml({"b.png", 8, 8, 3, {}})));
  write_file(dir / "annotations" / "a.xml", std::string_view(write_voc_xml({"a.png", 8, 8, 3, {{"t", {0, 0, 2, 2}, false}}})));
  write_file(dir / "annotations" / "notes.txt", std::string_view("ignored"));
  const auto gt = load_ground_truth(dir.path());
  ASSERT_EQ(gt.size(), 2u);
  EXPECT_EQ(gt.begin()->first, "a");
  EXPECT_EQ(gt.at("a").objects.size(), 1u);
  EXPECT_EQ(load_ground_truth(dir / "annotations").size(), 2u);
  write_file(dir / "annotations" / "c.xml", std::string_view("<annotation>"));
  try {
    load_ground_truth(dir.path());
    FAIL();
  } catch (const MalformedAnnotation& e) {
    EXPECT_NE(std::string(e.what()).find("c.xml"), std::string::npos);
  }
}

TEST(Detections, ParseWellFormed) {
  const std::string text =
      "{\"image\":\"img_000000\",\"class\":\"target\",\"bbox\":[1,2,30,40],\"score\":0.99}\n"
      "\n"
      "{\"image\":\"img_000001\",\"class\":\"target\",\"bbox\":[0.4,2.6,30,40],\"score\":1}\n"
      "{\"image\":\"img_000002\",\"class\":\"other\",\"bbox\":[5,5,6,6],\"score\":0}\n";
  const auto d = parse_detections(text);
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d[0], (Detection{"img_000000", "target", {1, 2, 30, 40}, 0.99}));
  EXPECT_EQ(d[1].box, (BBox{0, 3, 30, 40}));
  EXPECT_EQ(d[2].class_name, "other");
  EXPECT_EQ(parse_detections(write_detections(d)), d);
}

TEST(Detections, EmptyFileIsEmptyList) {
  EXPECT_TRUE(parse_detections("").empty());
  EXPECT_TRUE(parse_detections("\n  \n").empty());
}

TEST(Detections, ErrorsNameTheLine) {
  const std::string good = "{\"image\":\"a\",\"class\":\"t\",\"bbox\":[1,2,3,4],\"score\":0.5}\n";
  try {
    parse_detections(good + good + "{\"image\":\"a\",\"class\":\"t\",\"bbox\":[1,2,3,4],\"score\":1.5}\n");
    FAIL();
  } catch (const MalformedDetections& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_detections("{not json}\n"), MalformedDetections);
  EXPECT_THROW(parse_detections("{\"image\":\"a\",\"class\":\"t\",\"bbox\":[1,2,3],\"score\":0.5}"), MalformedDetections);
  EXPECT_THROW(parse_detections("{\"image\":\"a\",\"class\":\"t\",\"bbox\":[3,2,1,4],\"score\":0.5}"), MalformedDetections);
  EXPECT_THROW(parse_detections("{\"class\":\"t\",\"bbox\":[1,2,3,4],\"score\":0.5}"), MalformedDetections);
  EXPECT_THROW(parse_detections("{\"image\":\"a\",\"class\":\"t\",\"bbox\":[1,2,3,4]}"), MalformedDetections);
  EXPECT_THROW(parse_detections("[1,2]"), MalformedDetections);
}

}  // namespace
}  // namespace cadsynth
