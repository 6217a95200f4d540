#include "segt/image_io.hpp"

#include "segt/error.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <vector>

namespace segt {
namespace {

cv::Mat read_unchanged(const std::filesystem::path& path) {
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (m.empty()) {
        throw InputError("cannot read image: " + path.string());
    }
    return m;
}

void write_or_throw(const std::filesystem::path& path, const cv::Mat& m) {
    if (!cv::imwrite(path.string(), m)) {
        throw InputError("cannot write image: " + path.string());
    }
}

cv::Mat to_u8_gray(const torch::Tensor& map) {
    auto t = map.detach().to(torch::kCPU).to(torch::kFloat64).squeeze();
    if (t.dim() != 2) {
        throw InputError("write_gray: expected an H×W map");
    }
    t = (t.clamp(0.0, 1.0) * 255.0).round().to(torch::kUInt8).contiguous();
    cv::Mat m(static_cast<int>(t.size(0)), static_cast<int>(t.size(1)), CV_8UC1, t.data_ptr<uint8_t>());
    return m.clone();
}

torch::Tensor to_u8_rgb(const torch::Tensor& image) {
    auto t = image.detach().to(torch::kCPU);
    if (t.dim() != 3 || t.size(0) != 3) {
        throw InputError("expected a 3×H×W image");
    }
    if (t.scalar_type() != torch::kUInt8) {
        t = (t.to(torch::kFloat64).clamp(0.0, 1.0) * 255.0).round().to(torch::kUInt8);
    }
    return t.contiguous();
}

}  // namespace

torch::Tensor read_image(const std::filesystem::path& path) {
    cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) {
        throw InputError("cannot read image: " + path.string());
    }
    cv::Mat rgb;
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
    auto t = torch::from_blob(rgb.data, {rgb.rows, rgb.cols, 3}, torch::kUInt8).clone();
    return t.permute({2, 0, 1}).to(torch::kFloat32).div_(255.0).contiguous();
}

torch::Tensor read_mask(const std::filesystem::path& path) {
    cv::Mat m = read_unchanged(path);
    if (m.channels() > 1) {
        std::vector<cv::Mat> planes;
        cv::split(m, planes);
        for (std::size_t c = 1; c < std::min<std::size_t>(planes.size(), 3); ++c) {
            if (cv::norm(planes[0], planes[c], cv::NORM_INF) != 0.0) {
                throw InputError("mask is not single-channel: " + path.string());
            }
        }
        m = planes[0];
    }
    cv::Mat f;
    m.convertTo(f, CV_64F);
    double max_value = 0.0;
    cv::minMaxLoc(f, nullptr, &max_value);
    // {0,1} masks keep their scale; anything larger is read as 8/16-bit.
    const double range = max_value <= 1.0 ? 1.0 : (m.depth() == CV_16U ? 65535.0 : 255.0);
    auto t = torch::from_blob(f.data, {1, f.rows, f.cols}, torch::kFloat64).clone();
    return (t / range >= 0.5).to(torch::kFloat32);
}

void write_gray(const std::filesystem::path& path, const torch::Tensor& map) {
    write_or_throw(path, to_u8_gray(map));
}

void write_rgb(const std::filesystem::path& path, const torch::Tensor& image) {
    auto t = to_u8_rgb(image).permute({1, 2, 0}).contiguous();
    cv::Mat rgb(static_cast<int>(t.size(0)), static_cast<int>(t.size(1)), CV_8UC3, t.data_ptr<uint8_t>());
    cv::Mat bgr;
    cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
    write_or_throw(path, bgr);
}

torch::Tensor draw_overlay(const torch::Tensor& image, const torch::Tensor& mask) {
    auto out = to_u8_rgb(image).clone();
    auto m = (mask.detach().to(torch::kCPU).squeeze() > 0.5).to(torch::kUInt8).contiguous();
    cv::Mat mm(static_cast<int>(m.size(0)), static_cast<int>(m.size(1)), CV_8UC1, m.data_ptr<uint8_t>());
    cv::Mat eroded;
    cv::erode(mm, eroded, cv::Mat::ones(3, 3, CV_8U), cv::Point(-1, -1), 1, cv::BORDER_REPLICATE);
    cv::Mat ring = mm - eroded;
    auto boundary = torch::from_blob(ring.data, {ring.rows, ring.cols}, torch::kUInt8).to(torch::kBool);
    out[0].masked_fill_(boundary, 0);
    out[1].masked_fill_(boundary, 255);
    out[2].masked_fill_(boundary, 0);
    return out;
}

}  // namespace segt
