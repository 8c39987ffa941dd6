#include "forge/image_io.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <fstream>
#include <vector>

#include "forge/error.hpp"

namespace forge {

Image load_image(const std::filesystem::path& path) {
    // Decode from an in-memory buffer so read failures and decode failures
    // stay distinguishable.
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image file: " + path.string());
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed: " + path.string());

    cv::Mat raw(1, static_cast<int>(bytes.size()), CV_8UC1,
                bytes.empty() ? nullptr : bytes.data());
    cv::Mat decoded = bytes.empty() ? cv::Mat() : cv::imdecode(raw, cv::IMREAD_COLOR);
    if (decoded.empty()) throw FormatError("cannot decode image: " + path.string());

    Image img(decoded.cols, decoded.rows);
    for (int y = 0; y < decoded.rows; ++y) {
        const cv::Vec3b* src = decoded.ptr<cv::Vec3b>(y);
        float* dst = img.row(y);
        for (int x = 0; x < decoded.cols; ++x) {
            // OpenCV decodes BGR.
            dst[x * 3 + 0] = dequantize_channel(src[x][2]);
            dst[x * 3 + 1] = dequantize_channel(src[x][1]);
            dst[x * 3 + 2] = dequantize_channel(src[x][0]);
        }
    }
    return img;
}

void save_png(const Image& img, const std::filesystem::path& path) {
    if (img.empty()) throw ShapeError("save_png: empty image");
    cv::Mat mat(img.height(), img.width(), CV_8UC3);
    for (int y = 0; y < img.height(); ++y) {
        const float* src = img.row(y);
        cv::Vec3b* dst = mat.ptr<cv::Vec3b>(y);
        for (int x = 0; x < img.width(); ++x) {
            dst[x][2] = quantize_channel(src[x * 3 + 0]);
            dst[x][1] = quantize_channel(src[x * 3 + 1]);
            dst[x][0] = quantize_channel(src[x * 3 + 2]);
        }
    }
    std::vector<uint8_t> encoded;
    if (!cv::imencode(".png", mat, encoded)) {
        throw IoError("PNG encode failed: " + path.string());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open output file: " + path.string());
    out.write(reinterpret_cast<const char*>(encoded.data()),
              static_cast<std::streamsize>(encoded.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace forge
