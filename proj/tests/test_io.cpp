#include <cstring>
#include <filesystem>

#include <gtest/gtest.h>

#include "dtact/io.hpp"
#include "support.hpp"

using namespace dtact;
using namespace dtact::io;

namespace {

DepthMap float_depth(check::Gen& gen, int w, int h)
{
    DepthMap d(w, h);
    for (auto& v : d.data())
        v = static_cast<float>(gen.uniform(0.0, 3.0));
    return d;
}

template <typename F>
std::size_t parse_offset(F&& f)
{
    try {
        f();
    }
    catch (const ParseError& e) {
        return e.offset();
    }
    ADD_FAILURE() << "expected ParseError";
    return static_cast<std::size_t>(-1);
}

}  // namespace

TEST(Pgm, RoundTripRandomImages)
{
    check::Gen gen(1);
    for (int i = 0; i < 30; ++i) {
        const GrayImage img = gen.gray(gen.integer(1, 90), gen.integer(1, 90));
        EXPECT_EQ(decode_pgm(encode_pgm(img)), img);
    }
}

TEST(Pgm, HeaderLayout)
{
    const std::string bytes = encode_pgm(GrayImage(3, 2, 7));
    EXPECT_EQ(bytes.substr(0, 12), "P5\n3 2\n255\n\x07");
    EXPECT_EQ(bytes.size(), 11u + 6u);
}

TEST(Pgm, CommentsAreSkipped)
{
    const std::string bytes = "P5\n# made by hand\n2 1 # trailing\n255\n\x01\x02";
    const GrayImage img = decode_pgm(bytes);
    EXPECT_EQ(img.at(0, 0), 1);
    EXPECT_EQ(img.at(1, 0), 2);
}

TEST(Pgm, MalformedInputsCarryOffsets)
{
    EXPECT_EQ(parse_offset([] { decode_pgm("P6\n1 1\n255\n\x01"); }), 0u);
    EXPECT_EQ(parse_offset([] { decode_pgm("P5\n1 1\n65535\n\x01\x01"); }), 7u);
    EXPECT_EQ(parse_offset([] { decode_pgm("P5\nx 1\n255\n\x01"); }), 3u);
    EXPECT_EQ(parse_offset([] { decode_pgm("P5\n4 4\n255\nab"); }), 13u);
    EXPECT_THROW(decode_pgm(""), ParseError);
    try {
        decode_pgm("P5\n4 4\n255\nab");
    }
    catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("at byte 13"), std::string::npos);
    }
}

TEST(Depth, RoundTripBitIdentical)
{
    check::Gen gen(2);
    for (int i = 0; i < 20; ++i) {
        const DepthMap d = float_depth(gen, gen.integer(1, 70), gen.integer(1, 70));
        const DepthMap back = decode_depth(encode_depth(d));
        ASSERT_EQ(back.width(), d.width());
        EXPECT_EQ(std::memcmp(back.data().data(), d.data().data(), d.size() * sizeof(double)), 0);
        EXPECT_EQ(encode_depth(back), encode_depth(d));
    }
}

TEST(Depth, HeaderAndLittleEndianPayload)
{
    DepthMap d(2, 1, std::vector<double>{1.0, 0.5});
    const std::string bytes = encode_depth(d);
    EXPECT_EQ(bytes.substr(0, 13), "DTDEPTH1\n2 1\n");
    // 1.0f = 0x3f800000, little-endian.
    EXPECT_EQ(static_cast<unsigned char>(bytes[13]), 0x00);
    EXPECT_EQ(static_cast<unsigned char>(bytes[16]), 0x3f);
    EXPECT_EQ(static_cast<unsigned char>(bytes[15]), 0x80);
}

TEST(Depth, RejectsBadInput)
{
    const std::string good = encode_depth(DepthMap(2, 2, 0.25));
    EXPECT_EQ(parse_offset([&] { decode_depth("DTDEPTH2" + good.substr(8)); }), 0u);
    EXPECT_EQ(parse_offset([&] { decode_depth(good.substr(0, good.size() - 3)); }), good.size() - 3);
    EXPECT_THROW(decode_depth(good + "x"), ParseError);
    std::string negative = good;
    negative[good.size() - 1] = static_cast<char>(0xbf);  // sign bit set
    EXPECT_EQ(parse_offset([&] { decode_depth(negative); }), good.size() - 4);
    std::string nan = good;
    for (int k = 0; k < 4; ++k)
        nan[13 + k] = static_cast<char>(0xff);
    EXPECT_EQ(parse_offset([&] { decode_depth(nan); }), 13u);
}

TEST(Ply, RoundTripFloatClouds)
{
    check::Gen gen(3);
    for (int i = 0; i < 10; ++i) {
        PointCloud cloud(gen.integer(0, 300));
        for (auto& p : cloud)
            p = Eigen::Vector3f(float(gen.uniform(-12, 12)), float(gen.uniform(-12, 12)), float(gen.uniform(-3, 0)))
                    .cast<double>();
        const PointCloud back = decode_ply(encode_ply(cloud));
        ASSERT_EQ(back.size(), cloud.size());
        for (std::size_t k = 0; k < cloud.size(); ++k)
            EXPECT_EQ(back[k], cloud[k]);
    }
}

TEST(Ply, HeaderDeclaresVertexCount)
{
    const std::string bytes = encode_ply({{0, 0, 0}, {1, 2, 3}});
    EXPECT_NE(bytes.find("element vertex 2\n"), std::string::npos);
    EXPECT_NE(bytes.find("property float x\nproperty float y\nproperty float z\n"), std::string::npos);
    EXPECT_EQ(bytes.rfind("ply\n", 0), 0u);
}

TEST(Ply, AcceptsCommentsDoubleAndEmptyFaces)
{
    const std::string bytes = "ply\nformat ascii 1.0\ncomment hi\nelement vertex 1\nproperty double x\n"
                              "property double y\nproperty double z\nelement face 0\n"
                              "property list uchar int vertex_indices\nend_header\n1.5 -2 3e-1\n";
    const PointCloud c = decode_ply(bytes);
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c[0], Eigen::Vector3d(1.5, -2.0, 0.3));
}

TEST(Ply, RejectsMalformedInput)
{
    EXPECT_EQ(parse_offset([] { decode_ply("plx\n"); }), 0u);
    EXPECT_THROW(decode_ply("ply\nformat binary_little_endian 1.0\nelement vertex 0\nend_header\n"), ParseError);
    const std::string header = "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\n"
                               "property float z\nend_header\n";
    EXPECT_EQ(parse_offset([&] { decode_ply(header + "1 2 3\n4 5"); }), header.size() + 9);
    EXPECT_THROW(decode_ply(header + "1 2 3\n4 5 6\n7\n"), ParseError);
    EXPECT_THROW(decode_ply(header + "1 2 3\n4 five 6\n"), ParseError);
    EXPECT_THROW(decode_ply("ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nend_header\n1\n"),
                 ParseError);
    EXPECT_THROW(decode_ply("ply\nformat ascii 1.0\nelement vertex 1\n"), ParseError);
}

TEST(Calibration, RoundTripBothMethods)
{
    std::array<double, 256> e{};
    check::Gen gen(4);
    double acc = 0.0;
    for (int i = 1; i < 256; ++i)
        e[i] = acc += gen.uniform(0.0, 0.01);
    const CalibrationFile single{calib::MappingList(e, 173), 1.5};
    const CalibrationFile back = decode_calibration(encode_calibration(single));
    EXPECT_EQ(std::get<calib::MappingList>(back.method), std::get<calib::MappingList>(single.method));
    EXPECT_EQ(back.depth_clamp, 1.5);

    const CalibrationFile reg{calib::RegressionModel{1.234567890123e-5, 0.0098765, 579.0, 0.0}, 2.0};
    const CalibrationFile rback = decode_calibration(encode_calibration(reg));
    EXPECT_EQ(std::get<calib::RegressionModel>(rback.method), std::get<calib::RegressionModel>(reg.method));
    EXPECT_EQ(encode_calibration(rback), encode_calibration(reg));
}

TEST(Calibration, VersionedTextLayout)
{
    const std::string text = encode_calibration({calib::RegressionModel{1e-5, 0.01, 290, 290}, 2.0});
    EXPECT_EQ(text.rfind("DTCALIB 1\nmethod regression\n", 0), 0u);
    const std::string single = encode_calibration({calib::MappingList(), 2.0});
    EXPECT_NE(single.find("entries 256\n"), std::string::npos);
}

TEST(Calibration, RejectsBadInput)
{
    const std::string good = encode_calibration({calib::RegressionModel{1e-5, 0.01, 290, 290}, 2.0});
    EXPECT_EQ(parse_offset([&] { decode_calibration("DTCALIB 2\n" + good.substr(10)); }), 8u);
    EXPECT_THROW(decode_calibration("XTCALIB 1\n"), ParseError);
    EXPECT_THROW(decode_calibration("DTCALIB 1\nmethod magic\ndepth_clamp 2\n"), ParseError);
    EXPECT_THROW(decode_calibration(good.substr(0, good.size() - 12)), ParseError);
    EXPECT_THROW(decode_calibration(good + "extra\n"), ParseError);

    std::string single = encode_calibration({calib::MappingList(), 2.0});
    EXPECT_THROW(decode_calibration(single.substr(0, single.size() - 40)), ParseError);
    const auto pos = single.find("entries 256\n") + 12;
    std::string bumped = single;
    bumped.replace(pos, 2, "5\n");  // entries[0] must be zero
    EXPECT_THROW(decode_calibration(bumped), ParseError);
}

TEST(PoseReport, RoundTrip)
{
    check::Gen gen(5);
    std::vector<PoseRecord> recs;
    for (int i = 0; i < 6; ++i) {
        Pose p;
        p.rotation = Eigen::AngleAxisd(gen.uniform(-3, 3), gen.unit()).toRotationMatrix();
        p.translation = {gen.uniform(-2, 2), gen.uniform(-2, 2), gen.uniform(-2, 2)};
        recs.push_back({i, i % 2 == 0, gen.integer(0, 99), gen.uniform(0, 0.1), p, i == 3 ? "no contact points" : ""});
    }
    const auto back = decode_pose_report(encode_pose_report(recs));
    ASSERT_EQ(back.size(), recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        EXPECT_EQ(back[i].frame, recs[i].frame);
        EXPECT_EQ(back[i].converged, recs[i].converged);
        EXPECT_EQ(back[i].iterations, recs[i].iterations);
        EXPECT_EQ(back[i].rmse, recs[i].rmse);
        EXPECT_EQ(back[i].pose.toArray(), recs[i].pose.toArray());
        EXPECT_EQ(back[i].error, recs[i].error);
    }
    EXPECT_THROW(decode_pose_report("0 1 3 0.1 1 0 0\n"), ParseError);
}

TEST(Files, MissingFileIsIoError)
{
    EXPECT_THROW(read_file("/nonexistent/dir/x.pgm"), IoError);
    EXPECT_THROW(write_file("/nonexistent/dir/x.pgm", "x"), IoError);
    const auto dir = std::filesystem::temp_directory_path() / "dtact_io_test";
    std::filesystem::create_directories(dir);
    const GrayImage img = check::Gen(6).gray(5, 4);
    save_pgm(dir / "a.pgm", img);
    EXPECT_EQ(load_pgm(dir / "a.pgm"), img);
    write_file(dir / "bad.pgm", "P5\n2 2\n255\n");
    try {
        load_pgm(dir / "bad.pgm");
        ADD_FAILURE();
    }
    catch (const ParseError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("bad.pgm"), std::string::npos);
        EXPECT_EQ(msg.find("at byte"), msg.rfind("at byte"));
    }
    std::filesystem::remove_all(dir);
}
