#include <kaplan/descriptor_io.hpp>
#include <kaplan/error.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace kaplan {

namespace {

constexpr std::array<char, 4> kMagic{'K', 'P', 'L', 'N'};
constexpr std::size_t kHeaderBytes = 4 + 4 * 4 + 3 * 8;
constexpr std::size_t kFrameBytes = 13 * 8;
// Limits that keep a corrupt header from requesting absurd allocations.
constexpr std::uint32_t kMaxPlanes = 1u << 16;
constexpr std::uint32_t kMaxResolution = 1u << 14;

class Writer {
public:
    explicit Writer(std::vector<std::byte>& out) : out_(out) {}

    template <class T>
    void put(T value)
    {
        auto bytes = std::bit_cast<std::array<std::byte, sizeof(T)>>(value);
        if constexpr (std::endian::native == std::endian::big) {
            std::reverse(bytes.begin(), bytes.end());
        }
        out_.insert(out_.end(), bytes.begin(), bytes.end());
    }

    void put_vec(const Vector3& v)
    {
        put(v.x());
        put(v.y());
        put(v.z());
    }

private:
    std::vector<std::byte>& out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::byte> in) : in_(in) {}

    template <class T>
    T get()
    {
        if (pos_ + sizeof(T) > in_.size()) {
            throw FormatError("kpln: truncated file");
        }
        std::array<std::byte, sizeof(T)> bytes{};
        std::memcpy(bytes.data(), in_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        if constexpr (std::endian::native == std::endian::big) {
            std::reverse(bytes.begin(), bytes.end());
        }
        return std::bit_cast<T>(bytes);
    }

    Vector3 get_vec()
    {
        const double x = get<double>();
        const double y = get<double>();
        const double z = get<double>();
        return {x, y, z};
    }

    std::size_t remaining() const { return in_.size() - pos_; }

private:
    std::span<const std::byte> in_;
    std::size_t pos_ = 0;
};

} // namespace

std::vector<std::byte> encode_kpln(const KaplanDescriptor& d)
{
    d.validate_layout();
    const std::size_t k = d.num_planes();
    const std::size_t cells = static_cast<std::size_t>(d.resolution) * static_cast<std::size_t>(d.resolution);

    std::vector<std::byte> out;
    out.reserve(kHeaderBytes + k * kFrameBytes + k * kChannelsPerPlane * cells * 4);
    for (char c : kMagic) {
        out.push_back(static_cast<std::byte>(c));
    }
    Writer w(out);
    w.put(kKplnVersion);
    w.put(static_cast<std::uint32_t>(k));
    w.put(static_cast<std::uint32_t>(d.resolution));
    w.put(static_cast<std::uint32_t>(kChannelsPerPlane));
    w.put_vec(d.query);
    for (const PlaneFrame& f : d.planes) {
        w.put_vec(f.origin);
        w.put_vec(f.u_axis);
        w.put_vec(f.v_axis);
        w.put_vec(f.w_axis);
        w.put(f.side_length);
    }
    for (const PlaneChannels& pc : d.channels) {
        for (const ChannelImage& img : pc.images) {
            for (double v : img.values()) {
                w.put(static_cast<float>(v));
            }
        }
    }
    return out;
}

KaplanDescriptor decode_kpln(std::span<const std::byte> bytes)
{
    if (bytes.size() < kHeaderBytes ||
        !std::equal(kMagic.begin(), kMagic.end(), bytes.begin(),
                    [](char c, std::byte b) { return static_cast<std::byte>(c) == b; })) {
        throw FormatError("kpln: bad magic");
    }
    Reader r(bytes.subspan(4));
    const auto version = r.get<std::uint32_t>();
    if (version != kKplnVersion) {
        throw FormatError("kpln: unsupported version " + std::to_string(version));
    }
    const auto k = r.get<std::uint32_t>();
    const auto res = r.get<std::uint32_t>();
    const auto c = r.get<std::uint32_t>();
    if (c != kChannelsPerPlane) {
        throw FormatError("kpln: expected 5 channels per plane, got " + std::to_string(c));
    }
    if (k == 0 || k > kMaxPlanes || res == 0 || res > kMaxResolution) {
        throw FormatError("kpln: implausible shape K=" + std::to_string(k) + " R=" + std::to_string(res));
    }
    const std::size_t cells = static_cast<std::size_t>(res) * res;
    const std::size_t expected = 3 * 8 + k * kFrameBytes + k * kChannelsPerPlane * cells * 4;
    if (r.remaining() != expected) {
        throw FormatError("kpln: payload is " + std::to_string(r.remaining()) + " bytes, expected " +
                          std::to_string(expected));
    }

    const Point3 query = r.get_vec();
    std::vector<PlaneFrame> planes(k);
    for (PlaneFrame& f : planes) {
        f.origin = r.get_vec();
        f.u_axis = r.get_vec();
        f.v_axis = r.get_vec();
        f.w_axis = r.get_vec();
        f.side_length = r.get<double>();
        f.resolution = static_cast<int>(res);
    }
    KaplanDescriptor d = KaplanDescriptor::zeros(query, std::move(planes));
    for (PlaneChannels& pc : d.channels) {
        for (ChannelImage& img : pc.images) {
            for (double& v : img.values()) {
                v = static_cast<double>(r.get<float>());
            }
        }
    }
    return d;
}

void write_kpln(const std::filesystem::path& path, const KaplanDescriptor& descriptor)
{
    const auto bytes = encode_kpln(descriptor);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("error while writing " + path.string());
    }
}

KaplanDescriptor read_kpln(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode_kpln(std::as_bytes(std::span(raw)));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

} // namespace kaplan
