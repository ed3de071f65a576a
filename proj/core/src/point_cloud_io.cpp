#include <kaplan/error.hpp>
#include <kaplan/point_cloud_io.hpp>

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace kaplan {

namespace {

std::vector<double> parse_numbers(const std::string& line, std::size_t line_no)
{
    std::vector<double> values;
    std::istringstream ss(line);
    std::string token;
    while (ss >> token) {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
        if (ec != std::errc() || ptr != token.data() + token.size()) {
            throw FormatError("line " + std::to_string(line_no) + ": cannot parse '" + token + "' as a number");
        }
        values.push_back(v);
    }
    return values;
}

enum class PlyFormat { ascii, binary_le, binary_be };

enum class ScalarType { int8, uint8, int16, uint16, int32, uint32, float32, float64 };

std::size_t type_size(ScalarType t)
{
    switch (t) {
    case ScalarType::int8:
    case ScalarType::uint8: return 1;
    case ScalarType::int16:
    case ScalarType::uint16: return 2;
    case ScalarType::int32:
    case ScalarType::uint32:
    case ScalarType::float32: return 4;
    case ScalarType::float64: return 8;
    }
    return 0;
}

ScalarType parse_type(const std::string& name)
{
    if (name == "char" || name == "int8") return ScalarType::int8;
    if (name == "uchar" || name == "uint8") return ScalarType::uint8;
    if (name == "short" || name == "int16") return ScalarType::int16;
    if (name == "ushort" || name == "uint16") return ScalarType::uint16;
    if (name == "int" || name == "int32") return ScalarType::int32;
    if (name == "uint" || name == "uint32") return ScalarType::uint32;
    if (name == "float" || name == "float32") return ScalarType::float32;
    if (name == "double" || name == "float64") return ScalarType::float64;
    throw FormatError("PLY: unknown property type '" + name + "'");
}

struct PlyProperty {
    std::string name;
    ScalarType type = ScalarType::float32;
    bool is_list = false;
    ScalarType count_type = ScalarType::uint8;
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> properties;
};

template <class T>
T load_scalar(const unsigned char* bytes, bool big_endian)
{
    std::array<unsigned char, sizeof(T)> buf{};
    std::memcpy(buf.data(), bytes, sizeof(T));
    const bool swap = big_endian != (std::endian::native == std::endian::big);
    if (swap) {
        std::reverse(buf.begin(), buf.end());
    }
    return std::bit_cast<T>(buf);
}

double decode_binary(ScalarType t, const unsigned char* bytes, bool big_endian)
{
    switch (t) {
    case ScalarType::int8: return static_cast<double>(load_scalar<std::int8_t>(bytes, big_endian));
    case ScalarType::uint8: return static_cast<double>(load_scalar<std::uint8_t>(bytes, big_endian));
    case ScalarType::int16: return static_cast<double>(load_scalar<std::int16_t>(bytes, big_endian));
    case ScalarType::uint16: return static_cast<double>(load_scalar<std::uint16_t>(bytes, big_endian));
    case ScalarType::int32: return static_cast<double>(load_scalar<std::int32_t>(bytes, big_endian));
    case ScalarType::uint32: return static_cast<double>(load_scalar<std::uint32_t>(bytes, big_endian));
    case ScalarType::float32: return static_cast<double>(load_scalar<float>(bytes, big_endian));
    case ScalarType::float64: return load_scalar<double>(bytes, big_endian);
    }
    return 0.0;
}

double read_binary_scalar(std::istream& in, ScalarType t, bool big_endian)
{
    std::array<unsigned char, 8> buf{};
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(type_size(t)));
    if (!in) {
        throw FormatError("PLY: unexpected end of binary data");
    }
    return decode_binary(t, buf.data(), big_endian);
}

std::string strip_cr(std::string line)
{
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    return line;
}

template <class T>
void append_le(std::string& out, T value)
{
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(bytes.begin(), bytes.end());
    }
    out.append(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

std::string lowercase_extension(const std::filesystem::path& path)
{
    std::string ext = path.extension().string();
    for (char& c : ext) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return ext;
}

} // namespace

PointCloud read_xyz(std::istream& in)
{
    PointCloud cloud;
    std::optional<bool> with_normals;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') {
            continue;
        }
        const auto values = parse_numbers(line, line_no);
        if (values.size() != 3 && values.size() != 6) {
            throw FormatError("line " + std::to_string(line_no) + ": expected 3 or 6 values, got " +
                          std::to_string(values.size()));
        }
        const bool has_n = values.size() == 6;
        if (with_normals && *with_normals != has_n) {
            throw FormatError("line " + std::to_string(line_no) + ": mixed lines with and without normals");
        }
        with_normals = has_n;
        cloud.points.emplace_back(values[0], values[1], values[2]);
        if (has_n) {
            cloud.normals.emplace_back(values[3], values[4], values[5]);
        }
    }
    cloud.validate();
    return cloud;
}

void write_xyz(std::ostream& out, const PointCloud& cloud)
{
    char buf[160];
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Point3& p = cloud.points[i];
        int n = std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g", p.x(), p.y(), p.z());
        out.write(buf, n);
        if (cloud.has_normals()) {
            const Vector3& nrm = cloud.normals[i];
            n = std::snprintf(buf, sizeof(buf), " %.17g %.17g %.17g", nrm.x(), nrm.y(), nrm.z());
            out.write(buf, n);
        }
        out.put('\n');
    }
}

PointCloud read_ply(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || strip_cr(line) != "ply") {
        throw FormatError("PLY: missing 'ply' magic line");
    }

    std::optional<PlyFormat> format;
    std::vector<PlyElement> elements;
    bool header_done = false;
    while (std::getline(in, line)) {
        line = strip_cr(line);
        std::istringstream ss(line);
        std::string keyword;
        ss >> keyword;
        if (keyword.empty() || keyword == "comment" || keyword == "obj_info") {
            continue;
        }
        if (keyword == "format") {
            std::string name;
            ss >> name;
            if (name == "ascii") {
                format = PlyFormat::ascii;
            } else if (name == "binary_little_endian") {
                format = PlyFormat::binary_le;
            } else if (name == "binary_big_endian") {
                format = PlyFormat::binary_be;
            } else {
                throw FormatError("PLY: unknown format '" + name + "'");
            }
        } else if (keyword == "element") {
            PlyElement e;
            ss >> e.name >> e.count;
            if (!ss) {
                throw FormatError("PLY: malformed element line '" + line + "'");
            }
            elements.push_back(std::move(e));
        } else if (keyword == "property") {
            if (elements.empty()) {
                throw FormatError("PLY: property before any element");
            }
            PlyProperty prop;
            std::string type;
            ss >> type;
            if (type == "list") {
                std::string count_type;
                std::string item_type;
                ss >> count_type >> item_type >> prop.name;
                prop.is_list = true;
                prop.count_type = parse_type(count_type);
                prop.type = parse_type(item_type);
            } else {
                prop.type = parse_type(type);
                ss >> prop.name;
            }
            if (prop.name.empty()) {
                throw FormatError("PLY: malformed property line '" + line + "'");
            }
            elements.back().properties.push_back(prop);
        } else if (keyword == "end_header") {
            header_done = true;
            break;
        } else {
            throw FormatError("PLY: unexpected header line '" + line + "'");
        }
    }
    if (!header_done || !format) {
        throw FormatError("PLY: incomplete header");
    }

    const bool big_endian = *format == PlyFormat::binary_be;
    PointCloud cloud;
    for (const PlyElement& element : elements) {
        const bool is_vertex = element.name == "vertex";
        std::array<int, 6> slot{};
        slot.fill(-1);
        if (is_vertex) {
            static constexpr std::array<const char*, 6> names{"x", "y", "z", "nx", "ny", "nz"};
            for (std::size_t p = 0; p < element.properties.size(); ++p) {
                for (std::size_t s = 0; s < names.size(); ++s) {
                    if (!element.properties[p].is_list && element.properties[p].name == names[s]) {
                        slot[s] = static_cast<int>(p);
                    }
                }
            }
            if (slot[0] < 0 || slot[1] < 0 || slot[2] < 0) {
                throw FormatError("PLY: vertex element lacks x, y or z");
            }
        }
        const bool has_normals = is_vertex && slot[3] >= 0 && slot[4] >= 0 && slot[5] >= 0;

        std::vector<double> values(element.properties.size());
        for (std::size_t row = 0; row < element.count; ++row) {
            if (*format == PlyFormat::ascii) {
                if (!std::getline(in, line)) {
                    throw FormatError("PLY: unexpected end of ascii data");
                }
                std::istringstream ss(strip_cr(line));
                for (std::size_t p = 0; p < element.properties.size(); ++p) {
                    if (element.properties[p].is_list) {
                        std::size_t n = 0;
                        ss >> n;
                        double skip = 0.0;
                        for (std::size_t k = 0; k < n; ++k) {
                            ss >> skip;
                        }
                    } else {
                        ss >> values[p];
                    }
                    if (!ss) {
                        throw FormatError("PLY: malformed ascii row " + std::to_string(row));
                    }
                }
            } else {
                for (std::size_t p = 0; p < element.properties.size(); ++p) {
                    const PlyProperty& prop = element.properties[p];
                    if (prop.is_list) {
                        const auto n = static_cast<std::size_t>(read_binary_scalar(in, prop.count_type, big_endian));
                        for (std::size_t k = 0; k < n; ++k) {
                            read_binary_scalar(in, prop.type, big_endian);
                        }
                    } else {
                        values[p] = read_binary_scalar(in, prop.type, big_endian);
                    }
                }
            }
            if (is_vertex) {
                cloud.points.emplace_back(values[slot[0]], values[slot[1]], values[slot[2]]);
                if (has_normals) {
                    cloud.normals.emplace_back(values[slot[3]], values[slot[4]], values[slot[5]]);
                }
            }
        }
        if (is_vertex) {
            break; // nothing after the vertices is needed
        }
    }
    cloud.validate();
    return cloud;
}

void write_ply(std::ostream& out, const PointCloud& cloud)
{
    std::string data;
    data += "ply\nformat binary_little_endian 1.0\ncomment written by kaplan\n";
    data += "element vertex " + std::to_string(cloud.size()) + "\n";
    data += "property double x\nproperty double y\nproperty double z\n";
    if (cloud.has_normals()) {
        data += "property double nx\nproperty double ny\nproperty double nz\n";
    }
    data += "end_header\n";
    data.reserve(data.size() + cloud.size() * (cloud.has_normals() ? 48 : 24));
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (int c = 0; c < 3; ++c) {
            append_le(data, cloud.points[i][c]);
        }
        if (cloud.has_normals()) {
            for (int c = 0; c < 3; ++c) {
                append_le(data, cloud.normals[i][c]);
            }
        }
    }
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

PointCloud read_point_cloud(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    try {
        return lowercase_extension(path) == ".ply" ? read_ply(in) : read_xyz(in);
    } catch (const IoError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_point_cloud(const std::filesystem::path& path, const PointCloud& cloud)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    if (lowercase_extension(path) == ".ply") {
        write_ply(out, cloud);
    } else {
        write_xyz(out, cloud);
    }
    if (!out) {
        throw FormatError("error while writing " + path.string());
    }
}

} // namespace kaplan
