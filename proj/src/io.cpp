#include "dtact/io.hpp"

#include <bit>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace dtact::io {

ParseError::ParseError(const std::string& what, std::size_t offset)
    : Error(what + " at byte " + std::to_string(offset)), detail_(what), offset_(offset)
{
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string() + ": " + std::strerror(errno));
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad())
        throw IoError("cannot read " + path.string());
    return bytes;
}

void write_file(const std::filesystem::path& path, std::string_view bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot write " + path.string() + ": " + std::strerror(errno));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out)
        throw IoError("cannot write " + path.string());
}

namespace {

bool is_space(char c)
{
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

class Cursor
{
  public:
    explicit Cursor(std::string_view bytes) : bytes_(bytes) {}

    std::size_t pos() const { return pos_; }
    bool done() const { return pos_ >= bytes_.size(); }
    std::size_t remaining() const { return bytes_.size() - pos_; }

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }

    void expect(std::string_view literal, const char* what)
    {
        if (bytes_.substr(pos_, literal.size()) != literal)
            fail(std::string("expected ") + what);
        pos_ += literal.size();
    }

    /// Skips whitespace; with `comments`, '#' starts a comment to end of line.
    void skip_space(bool comments = false)
    {
        while (pos_ < bytes_.size()) {
            if (is_space(bytes_[pos_]))
                ++pos_;
            else if (comments && bytes_[pos_] == '#')
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n')
                    ++pos_;
            else
                break;
        }
    }

    void skip_inline_space()
    {
        while (pos_ < bytes_.size() && (bytes_[pos_] == ' ' || bytes_[pos_] == '\t' || bytes_[pos_] == '\r'))
            ++pos_;
    }

    /// Exactly one whitespace byte, as after a binary header.
    void single_space(const char* what)
    {
        if (done() || !is_space(bytes_[pos_]))
            fail(std::string("expected whitespace after ") + what);
        ++pos_;
    }

    long long integer(const char* what, long long lo, long long hi)
    {
        long long value = 0;
        const char* first = bytes_.data() + pos_;
        const char* last = bytes_.data() + bytes_.size();
        const auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc() || ptr == first)
            fail(std::string("expected ") + what);
        if (value < lo || value > hi)
            fail(std::string(what) + " out of range");
        pos_ += static_cast<std::size_t>(ptr - first);
        return value;
    }

    double number(const char* what)
    {
        double value = 0.0;
        const char* first = bytes_.data() + pos_;
        const char* last = bytes_.data() + bytes_.size();
        const auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc() || ptr == first)
            fail(std::string("expected ") + what);
        if (!std::isfinite(value))
            fail(std::string(what) + " is not finite");
        pos_ += static_cast<std::size_t>(ptr - first);
        return value;
    }

    std::string_view word()
    {
        const std::size_t start = pos_;
        while (pos_ < bytes_.size() && !is_space(bytes_[pos_]))
            ++pos_;
        return bytes_.substr(start, pos_ - start);
    }

    /// Rest of the current line, without the newline, which is consumed.
    std::string_view line()
    {
        const std::size_t start = pos_;
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n')
            ++pos_;
        std::string_view out = bytes_.substr(start, pos_ - start);
        if (pos_ < bytes_.size())
            ++pos_;
        if (!out.empty() && out.back() == '\r')
            out.remove_suffix(1);
        return out;
    }

    void end_of_line(const char* what)
    {
        skip_inline_space();
        if (done())
            return;
        if (bytes_[pos_] != '\n')
            fail(std::string("unexpected data after ") + what);
        ++pos_;
    }

    std::string_view take(std::size_t n) { std::string_view out = bytes_.substr(pos_, n); pos_ += n; return out; }

  private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

constexpr long long kMaxDim = 1 << 20;

std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// PGM
// ---------------------------------------------------------------------------

std::string encode_pgm(const GrayImage& img)
{
    std::string out = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
    out.append(reinterpret_cast<const char*>(img.data().data()), img.size());
    return out;
}

GrayImage decode_pgm(std::string_view bytes)
{
    Cursor c(bytes);
    c.expect("P5", "PGM magic \"P5\"");
    c.skip_space(true);
    const int w = static_cast<int>(c.integer("PGM width", 1, kMaxDim));
    c.skip_space(true);
    const int h = static_cast<int>(c.integer("PGM height", 1, kMaxDim));
    c.skip_space(true);
    const std::size_t maxval_at = c.pos();
    const long long maxval = c.integer("PGM maxval", 1, 65535);
    if (maxval != 255)
        throw ParseError("unsupported PGM maxval " + std::to_string(maxval) + " (need 255)", maxval_at);
    c.single_space("PGM header");
    const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if (c.remaining() < n)
        throw ParseError("truncated PGM pixel data: need " + std::to_string(n) + " bytes, have " +
                             std::to_string(c.remaining()),
                         bytes.size());
    const std::string_view px = c.take(n);
    std::vector<std::uint8_t> data(px.begin(), px.end());
    return GrayImage(w, h, std::move(data));
}

void save_pgm(const std::filesystem::path& path, const GrayImage& img) { write_file(path, encode_pgm(img)); }

GrayImage load_pgm(const std::filesystem::path& path)
{
    try {
        return decode_pgm(read_file(path));
    }
    catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.detail(), e.offset());
    }
}

// ---------------------------------------------------------------------------
// Depth
// ---------------------------------------------------------------------------

std::string encode_depth(const DepthMap& depth)
{
    std::string out = "DTDEPTH1\n" + std::to_string(depth.width()) + " " + std::to_string(depth.height()) + "\n";
    const std::size_t header = out.size();
    out.resize(header + 4 * depth.size());
    char* p = out.data() + header;
    for (std::size_t i = 0; i < depth.size(); ++i) {
        const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(depth[i]));
        p[4 * i + 0] = static_cast<char>(bits & 0xFFu);
        p[4 * i + 1] = static_cast<char>((bits >> 8) & 0xFFu);
        p[4 * i + 2] = static_cast<char>((bits >> 16) & 0xFFu);
        p[4 * i + 3] = static_cast<char>((bits >> 24) & 0xFFu);
    }
    return out;
}

DepthMap decode_depth(std::string_view bytes)
{
    Cursor c(bytes);
    c.expect("DTDEPTH1", "depth magic \"DTDEPTH1\"");
    c.skip_space();
    const int w = static_cast<int>(c.integer("depth width", 1, kMaxDim));
    c.skip_space();
    const int h = static_cast<int>(c.integer("depth height", 1, kMaxDim));
    c.single_space("depth header");
    const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if (c.remaining() < 4 * n)
        throw ParseError("truncated depth data: need " + std::to_string(4 * n) + " bytes, have " +
                             std::to_string(c.remaining()),
                         bytes.size());
    const std::size_t start = c.pos();
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + start);
    DepthMap depth(w, h);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t bits = static_cast<std::uint32_t>(p[4 * i]) | (static_cast<std::uint32_t>(p[4 * i + 1]) << 8) |
                                   (static_cast<std::uint32_t>(p[4 * i + 2]) << 16) |
                                   (static_cast<std::uint32_t>(p[4 * i + 3]) << 24);
        const float v = std::bit_cast<float>(bits);
        if (!std::isfinite(v) || v < 0.0f)
            throw ParseError("invalid depth value", start + 4 * i);
        depth[i] = v;
    }
    if (c.remaining() != 4 * n)
        throw ParseError("trailing bytes after depth data", start + 4 * n);
    return depth;
}

void save_depth(const std::filesystem::path& path, const DepthMap& depth) { write_file(path, encode_depth(depth)); }

DepthMap load_depth(const std::filesystem::path& path)
{
    try {
        return decode_depth(read_file(path));
    }
    catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.detail(), e.offset());
    }
}

// ---------------------------------------------------------------------------
// PLY
// ---------------------------------------------------------------------------

std::string encode_ply(const PointCloud& cloud)
{
    std::string out = "ply\nformat ascii 1.0\nelement vertex " + std::to_string(cloud.size()) +
                      "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
    out.reserve(out.size() + cloud.size() * 36);
    char buf[96];
    for (const auto& p : cloud) {
        const int n = std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g\n", static_cast<double>(static_cast<float>(p.x())),
                                    static_cast<double>(static_cast<float>(p.y())),
                                    static_cast<double>(static_cast<float>(p.z())));
        out.append(buf, static_cast<std::size_t>(n));
    }
    return out;
}

PointCloud decode_ply(std::string_view bytes)
{
    Cursor c(bytes);
    if (c.line() != "ply")
        throw ParseError("expected PLY magic \"ply\"", 0);

    long long count = -1;
    std::vector<std::string> props;
    std::vector<bool> single;
    bool in_vertex = false;
    while (true) {
        if (c.done())
            c.fail("PLY header ends without end_header");
        const std::size_t at = c.pos();
        Cursor line(c.line());
        line.skip_space();
        const std::string_view key = line.word();
        auto fail = [&](const std::string& what) -> void { throw ParseError(what, at + line.pos()); };
        if (key == "end_header")
            break;
        if (key == "comment" || key == "obj_info" || key.empty())
            continue;
        line.skip_space();
        if (key == "format") {
            if (line.word() != "ascii")
                fail("only ascii PLY is supported");
        }
        else if (key == "element") {
            const std::string_view name = line.word();
            line.skip_space();
            const long long n = line.integer("element count", 0, 1LL << 40);
            in_vertex = name == "vertex";
            if (in_vertex)
                count = n;
            else if (n != 0)
                fail("unsupported PLY element \"" + std::string(name) + "\"");
        }
        else if (key == "property") {
            const std::string_view type = line.word();
            line.skip_space();
            const std::string_view name = line.word();
            if (in_vertex) {
                if (type != "float" && type != "float32" && type != "double" && type != "float64")
                    fail("vertex property " + std::string(name) + " must be float");
                props.emplace_back(name);
                single.push_back(type == "float" || type == "float32");
            }
        }
        else {
            fail("unknown PLY header line \"" + std::string(key) + "\"");
        }
    }
    if (count < 0)
        c.fail("PLY header has no vertex element");
    if (props != std::vector<std::string>{"x", "y", "z"})
        c.fail("PLY vertex properties must be x, y, z");

    PointCloud cloud;
    cloud.reserve(static_cast<std::size_t>(count));
    for (long long i = 0; i < count; ++i) {
        Eigen::Vector3d p;
        for (int k = 0; k < 3; ++k) {
            c.skip_space();
            if (c.done())
                c.fail("truncated PLY vertex data (" + std::to_string(i) + " of " + std::to_string(count) + " read)");
            const double v = c.number("vertex coordinate");
            p[k] = single[static_cast<std::size_t>(k)] ? static_cast<double>(static_cast<float>(v)) : v;
        }
        cloud.push_back(p);
    }
    c.skip_space();
    if (!c.done())
        c.fail("trailing data after PLY vertices");
    return cloud;
}

void save_ply(const std::filesystem::path& path, const PointCloud& cloud) { write_file(path, encode_ply(cloud)); }

PointCloud load_ply(const std::filesystem::path& path)
{
    try {
        return decode_ply(read_file(path));
    }
    catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.detail(), e.offset());
    }
}

// ---------------------------------------------------------------------------
// Calibration
// ---------------------------------------------------------------------------

std::string encode_calibration(const CalibrationFile& calib)
{
    std::string out = "DTCALIB 1\n";
    if (const auto* table = std::get_if<calib::MappingList>(&calib.method)) {
        out += "method single\n";
        out += "depth_clamp " + format_double(calib.depth_clamp) + "\n";
        out += "max_calibrated_index " + std::to_string(table->maxCalibratedIndex()) + "\n";
        out += "entries " + std::to_string(calib::MappingList::kSize) + "\n";
        for (double v : table->entries())
            out += format_double(v) + "\n";
    }
    else {
        const auto& m = std::get<calib::RegressionModel>(calib.method);
        out += "method regression\n";
        out += "depth_clamp " + format_double(calib.depth_clamp) + "\n";
        out += "k_c " + format_double(m.k_c) + "\n";
        out += "b_c " + format_double(m.b_c) + "\n";
        out += "center_u " + format_double(m.center_u) + "\n";
        out += "center_v " + format_double(m.center_v) + "\n";
    }
    return out;
}

namespace {

double keyed_number(Cursor& c, std::string_view key)
{
    c.skip_space();
    const std::size_t at = c.pos();
    if (c.word() != key)
        throw ParseError("expected \"" + std::string(key) + "\"", at);
    c.skip_inline_space();
    const double v = c.number(std::string(key).c_str());
    c.end_of_line(std::string(key).c_str());
    return v;
}

}  // namespace

CalibrationFile decode_calibration(std::string_view bytes)
{
    Cursor c(bytes);
    c.expect("DTCALIB", "calibration magic \"DTCALIB\"");
    c.skip_inline_space();
    const std::size_t version_at = c.pos();
    const long long version = c.integer("calibration version", 0, 1000000);
    if (version != 1)
        throw ParseError("unsupported calibration version " + std::to_string(version), version_at);
    c.end_of_line("version");
    c.skip_space();
    const std::size_t method_at = c.pos();
    if (c.word() != "method")
        throw ParseError("expected \"method\"", method_at);
    c.skip_inline_space();
    const std::size_t tag_at = c.pos();
    const std::string_view tag = c.word();
    c.end_of_line("method");

    CalibrationFile out;
    const std::size_t clamp_at = c.pos();
    out.depth_clamp = keyed_number(c, "depth_clamp");
    if (!(out.depth_clamp > 0.0))
        throw ParseError("depth_clamp must be positive", clamp_at);

    if (tag == "single") {
        c.skip_space();
        const std::size_t at = c.pos();
        const double max_index = keyed_number(c, "max_calibrated_index");
        if (max_index != std::floor(max_index) || max_index < 0 || max_index >= calib::MappingList::kSize)
            throw ParseError("max_calibrated_index out of range", at);
        c.skip_space();
        const std::size_t count_at = c.pos();
        const double count = keyed_number(c, "entries");
        if (count != calib::MappingList::kSize)
            throw ParseError("mapping list must have 256 entries", count_at);
        std::array<double, calib::MappingList::kSize> entries{};
        std::size_t first_entry = c.pos();
        for (auto& e : entries) {
            c.skip_space();
            if (c.done())
                c.fail("truncated mapping list");
            e = c.number("mapping entry");
        }
        c.skip_space();
        if (!c.done())
            c.fail("trailing data after mapping list");
        try {
            out.method = calib::MappingList(entries, static_cast<int>(max_index));
        }
        catch (const Error& e) {
            throw ParseError(std::string("invalid mapping list: ") + e.what(), first_entry);
        }
    }
    else if (tag == "regression") {
        calib::RegressionModel m;
        m.k_c = keyed_number(c, "k_c");
        m.b_c = keyed_number(c, "b_c");
        m.center_u = keyed_number(c, "center_u");
        m.center_v = keyed_number(c, "center_v");
        c.skip_space();
        if (!c.done())
            c.fail("trailing data after regression model");
        out.method = m;
    }
    else {
        throw ParseError("unknown calibration method \"" + std::string(tag) + "\"", tag_at);
    }
    return out;
}

void save_calibration(const std::filesystem::path& path, const CalibrationFile& calib)
{
    write_file(path, encode_calibration(calib));
}

CalibrationFile load_calibration(const std::filesystem::path& path)
{
    try {
        return decode_calibration(read_file(path));
    }
    catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.detail(), e.offset());
    }
}

// ---------------------------------------------------------------------------
// Pose report
// ---------------------------------------------------------------------------

std::string encode_pose_report(const std::vector<PoseRecord>& records)
{
    std::string out = "# dtact pose report 1\n"
                      "# frame converged iterations rmse_mm r00 r01 r02 r10 r11 r12 r20 r21 r22 tx ty tz\n";
    for (const auto& r : records) {
        out += std::to_string(r.frame) + " " + (r.converged ? "1" : "0") + " " + std::to_string(r.iterations) + " " +
               format_double(r.rmse);
        for (double v : r.pose.toArray())
            out += " " + format_double(v);
        if (!r.error.empty()) {
            std::string msg = r.error;
            for (char& ch : msg)
                if (ch == '\n' || ch == '\r')
                    ch = ' ';
            out += " # " + msg;
        }
        out += "\n";
    }
    return out;
}

std::vector<PoseRecord> decode_pose_report(std::string_view bytes)
{
    Cursor c(bytes);
    std::vector<PoseRecord> records;
    while (true) {
        c.skip_space();
        if (c.done())
            break;
        if (bytes[c.pos()] == '#') {
            c.line();
            continue;
        }
        PoseRecord r;
        r.frame = static_cast<int>(c.integer("frame index", 0, 1LL << 30));
        c.skip_inline_space();
        r.converged = c.integer("converged flag", 0, 1) == 1;
        c.skip_inline_space();
        r.iterations = static_cast<int>(c.integer("iteration count", 0, 1LL << 30));
        c.skip_inline_space();
        r.rmse = c.number("rmse");
        std::array<double, 12> values{};
        for (auto& v : values) {
            c.skip_inline_space();
            v = c.number("pose value");
        }
        r.pose = Pose::fromArray(values);
        c.skip_inline_space();
        if (!c.done() && bytes[c.pos()] == '#') {
            c.take(1);
            c.skip_inline_space();
            r.error = std::string(c.line());
        }
        else {
            c.end_of_line("pose record");
        }
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace dtact::io
