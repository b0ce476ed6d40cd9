#include "addsr/codec.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace addsr {

namespace {

cv::Mat to_bgr_mat(const ImageU8& img) {
    cv::Mat m(img.h, img.w, CV_8UC3);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            auto& px = m.at<cv::Vec3b>(y, x);
            px[0] = img.at(y, x, 2);
            px[1] = img.at(y, x, 1);
            px[2] = img.at(y, x, 0);
        }
    return m;
}

ImageU8 from_bgr_mat(const cv::Mat& m) {
    ImageU8 img(m.rows, m.cols);
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x) {
            const auto& px = m.at<cv::Vec3b>(y, x);
            img.at(y, x, 0) = px[2];
            img.at(y, x, 1) = px[1];
            img.at(y, x, 2) = px[0];
        }
    return img;
}

} // namespace

ImageU8 jpeg_roundtrip(const ImageU8& img, int quality) {
    require(quality >= 1 && quality <= 100, "jpeg_roundtrip: quality outside [1,100]");
    std::vector<uchar> buf;
    cv::imencode(".jpg", to_bgr_mat(img), buf, {cv::IMWRITE_JPEG_QUALITY, quality});
    cv::Mat decoded = cv::imdecode(buf, cv::IMREAD_COLOR);
    if (decoded.empty()) throw std::runtime_error("jpeg_roundtrip: decode failed");
    return from_bgr_mat(decoded);
}

void save_png(const std::string& path, const ImageU8& img) {
    if (!cv::imwrite(path, to_bgr_mat(img)))
        throw std::runtime_error("save_png: failed to write " + path);
}

ImageU8 load_image(const std::string& path) {
    cv::Mat m = cv::imread(path, cv::IMREAD_COLOR);
    if (m.empty()) throw std::runtime_error("load_image: failed to read " + path);
    return from_bgr_mat(m);
}

std::string codec_version_string() {
    return std::string("opencv-") + CV_VERSION;
}

} // namespace addsr
