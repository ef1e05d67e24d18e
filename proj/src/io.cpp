#include "isar/io.hpp"

#include "isar/errors.hpp"
#include "isar/metrics.hpp"

#include <openssl/evp.h>

#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>
#include <vector>

#include <json.hpp>

namespace isar::io {

void write_text_atomic(const fs::path& path, std::string_view contents)
{
    static std::atomic<unsigned> counter{0};
    const auto tid = std::hash<std::thread::id>{}(std::this_thread::get_id());
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(tid) + "." + std::to_string(counter++);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) {
            fs::remove(tmp);
            throw std::runtime_error("failed writing " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

std::string read_text(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string sha256_hex(std::string_view bytes)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

// --- PGM --------------------------------------------------------------------

void write_pgm(const Image& image, const fs::path& path)
{
    if (image.size() == 0) {
        throw ArgumentError("cannot write an empty image");
    }
    if (!image.allFinite()) {
        throw ArgumentError("image has non-finite pixels");
    }
    if (image.minCoeff() < 0.0) {
        throw ArgumentError("PGM pixels must be nonnegative");
    }
    const double peak = image.maxCoeff();
    std::string out = "P2\n# scale " + format_double(peak) + "\n" + std::to_string(image.cols()) + " " +
                      std::to_string(image.rows()) + "\n" + std::to_string(kPgmMaxValue) + "\n";
    for (Eigen::Index r = 0; r < image.rows(); ++r) {
        for (Eigen::Index c = 0; c < image.cols(); ++c) {
            const long v = peak > 0.0 ? std::lround(image(r, c) / peak * kPgmMaxValue) : 0;
            if (c) {
                out += ' ';
            }
            out += std::to_string(v);
        }
        out += '\n';
    }
    write_text_atomic(path, out);
}

namespace {

// Whitespace-separated PGM tokens with '#' comments; "# scale" is captured.
class PgmTokens {
public:
    explicit PgmTokens(std::string text) : text_(std::move(text)) {}

    std::string next()
    {
        skip();
        if (pos_ >= text_.size()) {
            throw FormatError("unexpected end of PGM data");
        }
        const auto start = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) && text_[pos_] != '#') {
            ++pos_;
        }
        return text_.substr(start, pos_ - start);
    }

    long next_int()
    {
        const auto tok = next();
        long v = 0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
            throw FormatError("bad PGM integer '" + tok + "'");
        }
        return v;
    }

    std::optional<double> scale;

private:
    void skip()
    {
        while (pos_ < text_.size()) {
            const char ch = text_[pos_];
            if (std::isspace(static_cast<unsigned char>(ch))) {
                ++pos_;
            } else if (ch == '#') {
                const auto eol = text_.find('\n', pos_);
                const std::string line = text_.substr(pos_ + 1, eol == std::string::npos ? std::string::npos : eol - pos_ - 1);
                std::istringstream ls(line);
                std::string key;
                double v;
                if (ls >> key && key == "scale" && ls >> v) {
                    scale = v;
                }
                pos_ = eol == std::string::npos ? text_.size() : eol + 1;
            } else {
                break;
            }
        }
    }

    std::string text_;
    std::size_t pos_ = 0;
};

} // namespace

Image read_pgm(const fs::path& path)
{
    PgmTokens tok(read_text(path));
    const auto magic = tok.next();
    if (magic != "P2") {
        throw FormatError("unsupported PGM magic '" + magic + "'");
    }
    const long width = tok.next_int();
    const long height = tok.next_int();
    const long maxval = tok.next_int();
    if (width < 1 || height < 1 || maxval < 1 || maxval > 65535) {
        throw FormatError("bad PGM header");
    }
    Image img(height, width);
    for (long r = 0; r < height; ++r) {
        for (long c = 0; c < width; ++c) {
            const long v = tok.next_int();
            if (v < 0 || v > maxval) {
                throw FormatError("PGM pixel out of range");
            }
            img(r, c) = static_cast<double>(v);
        }
    }
    const double scale = tok.scale.value_or(static_cast<double>(maxval));
    img *= scale / static_cast<double>(maxval);
    return img;
}

// --- CSV --------------------------------------------------------------------

void write_csv_matrix(const Matrix& m, const fs::path& path)
{
    if (m.size() == 0) {
        throw ArgumentError("cannot write an empty matrix");
    }
    std::string out;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c) {
                out += ',';
            }
            out += format_double(m(r, c));
        }
        out += '\n';
    }
    write_text_atomic(path, out);
}

Matrix read_csv_matrix(const fs::path& path)
{
    std::istringstream in(read_text(path));
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::vector<double> row;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            const auto field = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
            double v = 0.0;
            const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
            if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
                throw FormatError("bad CSV number '" + field + "'");
            }
            row.push_back(v);
            if (comma == std::string::npos) {
                break;
            }
            start = comma + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw FormatError("ragged CSV matrix");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw FormatError("empty CSV matrix");
    }
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
    }
    return m;
}

// --- manifest ---------------------------------------------------------------

void write_manifest(const RunManifest& manifest, const fs::path& path)
{
    nlohmann::ordered_json j;
    j["command"] = manifest.command;
    j["config_digest"] = manifest.config_digest;
    j["master_seed"] = manifest.master_seed;
    j["tool_version"] = manifest.tool_version;
    j["files"] = nlohmann::ordered_json::object();
    for (const auto& [name, sum] : manifest.file_checksums) {
        j["files"][name] = sum;
    }
    write_text_atomic(path, j.dump(2) + "\n");
}

} // namespace isar::io
