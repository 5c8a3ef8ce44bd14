#include "glarefuse/image_io.hpp"

#include <png.h>

#include <jpeglib.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <vector>

namespace glarefuse {

namespace {

struct Signature {
    bool png = false;
    bool jpeg = false;
};

Signature sniff(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_image: cannot open " + path.string());
    unsigned char magic[8] = {};
    f.read(reinterpret_cast<char*>(magic), sizeof magic);
    static const unsigned char png_magic[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    Signature s;
    s.png = std::memcmp(magic, png_magic, 8) == 0;
    s.jpeg = magic[0] == 0xFF && magic[1] == 0xD8 && magic[2] == 0xFF;
    return s;
}

ImageBuffer read_png_file(const std::filesystem::path& path) {
    png_image im{};
    im.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&im, path.string().c_str()))
        throw std::runtime_error("read_image: " + path.string() + ": " + im.message);

    const bool color = (im.format & PNG_FORMAT_FLAG_COLOR) != 0;
    im.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    ImageBuffer out(static_cast<int>(im.width), static_cast<int>(im.height), color ? 3 : 1);
    if (!png_image_finish_read(&im, nullptr, out.data.data(), 0, nullptr)) {
        std::string msg = im.message;
        png_image_free(&im);
        throw std::runtime_error("read_image: " + path.string() + ": " + msg);
    }
    return out;
}

struct JpegErr {
    jpeg_error_mgr pub;
    std::jmp_buf jb;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_err_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErr*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jb, 1);
}

ImageBuffer read_jpeg_file(const std::filesystem::path& path) {
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(
        std::fopen(path.string().c_str(), "rb"), &std::fclose);
    if (!f) throw std::runtime_error("read_image: cannot open " + path.string());

    jpeg_decompress_struct cinfo{};
    JpegErr err{};
    cinfo.err = jpeg_std_error(&err.pub);
    err.pub.error_exit = jpeg_err_exit;
    if (setjmp(err.jb)) {
        jpeg_destroy_decompress(&cinfo);
        throw std::runtime_error("read_image: " + path.string() + ": " + err.message);
    }

    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, f.get());
    jpeg_read_header(&cinfo, TRUE);
    const bool gray = cinfo.num_components == 1;
    cinfo.out_color_space = gray ? JCS_GRAYSCALE : JCS_RGB;
    jpeg_start_decompress(&cinfo);

    ImageBuffer out(static_cast<int>(cinfo.output_width),
                    static_cast<int>(cinfo.output_height), gray ? 1 : 3);
    const std::size_t stride = static_cast<std::size_t>(out.width) * out.channels;
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = out.data.data() + stride * cinfo.output_scanline;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return out;
}

}  // namespace

ImageBuffer read_image(const std::filesystem::path& path) {
    const Signature s = sniff(path);
    if (s.png) return read_png_file(path);
    if (s.jpeg) return read_jpeg_file(path);
    throw std::runtime_error("read_image: " + path.string() + " is neither PNG nor JPEG");
}

void write_png(const std::filesystem::path& path, const ImageBuffer& img) {
    png_image im{};
    im.version = PNG_IMAGE_VERSION;
    im.width = static_cast<png_uint_32>(img.width);
    im.height = static_cast<png_uint_32>(img.height);
    im.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&im, path.string().c_str(), 0, img.data.data(), 0, nullptr))
        throw std::runtime_error("write_png: " + path.string() + ": " + im.message);
}

}  // namespace glarefuse
