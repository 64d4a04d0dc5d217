#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dtact/core.hpp"
#include "dtact/pose.hpp"
#include "dtact/recon.hpp"

namespace dtact::io {

/// Malformed or truncated input. The message names the byte offset at which
/// parsing stopped.
class ParseError : public Error
{
  public:
    ParseError(const std::string& what, std::size_t offset);
    std::size_t offset() const { return offset_; }
    /// The message without the offset suffix.
    const std::string& detail() const { return detail_; }

  private:
    std::string detail_;
    std::size_t offset_;
};

/// File could not be opened, read or written.
class IoError : public Error
{
  public:
    using Error::Error;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

// Binary PGM (P5), maxval 255. Comments in the header are skipped.
std::string encode_pgm(const GrayImage& img);
GrayImage decode_pgm(std::string_view bytes);
void save_pgm(const std::filesystem::path& path, const GrayImage& img);
GrayImage load_pgm(const std::filesystem::path& path);

// "DTDEPTH1", width and height in decimal text, then row-major little-endian
// float32 depths in mm. Values must be finite and non-negative.
std::string encode_depth(const DepthMap& depth);
DepthMap decode_depth(std::string_view bytes);
void save_depth(const std::filesystem::path& path, const DepthMap& depth);
DepthMap load_depth(const std::filesystem::path& path);

// ASCII PLY with one vertex element of float x, y, z.
std::string encode_ply(const PointCloud& cloud);
PointCloud decode_ply(std::string_view bytes);
void save_ply(const std::filesystem::path& path, const PointCloud& cloud);
PointCloud load_ply(const std::filesystem::path& path);

/// Calibrated depth model plus the clamp it was calibrated for.
struct CalibrationFile
{
    recon::DepthMethod method;
    double depth_clamp = 2.0;  // mm
};

// Versioned text: "DTCALIB 1", a method tag, then either the 256 mapping
// entries or k_c, b_c, center_u, center_v.
std::string encode_calibration(const CalibrationFile& calib);
CalibrationFile decode_calibration(std::string_view bytes);
void save_calibration(const std::filesystem::path& path, const CalibrationFile& calib);
CalibrationFile load_calibration(const std::filesystem::path& path);

struct PoseRecord
{
    int frame = 0;
    bool converged = false;
    int iterations = 0;
    double rmse = 0.0;
    Pose pose;
    std::string error;
};

// One line per frame: index, converged flag, iterations, RMSE, then the 12
// pose numbers (row-major R, then t). A failed frame carries its message
// after a '#'.
std::string encode_pose_report(const std::vector<PoseRecord>& records);
std::vector<PoseRecord> decode_pose_report(std::string_view bytes);

}  // namespace dtact::io
