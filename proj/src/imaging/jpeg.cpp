#include "abyss/imaging/jpeg.hpp"

#include <csetjmp>
#include <cstdio>
#include <cstdlib>
#include <string>

#include <jpeglib.h>

namespace abyss::imaging {

namespace {

struct ErrorManager {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void on_error(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<ErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

void on_message(j_common_ptr cinfo, int level) {
  // level -1 is a warning (e.g. premature end of data); count it and stay quiet
  if (level < 0) {
    auto* err = reinterpret_cast<ErrorManager*>(cinfo->err);
    if (err->pub.num_warnings == 0) (*cinfo->err->format_message)(cinfo, err->message);
    err->pub.num_warnings++;
  }
}

// The setjmp frames below only touch state that lives in the caller's
// frame, so nothing they own is left indeterminate after a longjmp.
struct EncodeState {
  jpeg_compress_struct cinfo{};
  ErrorManager err{};
  unsigned char* buffer = nullptr;
  unsigned long length = 0;
};

bool encode_impl(EncodeState& st, const ImageU8& src, int quality) {
  st.cinfo.err = jpeg_std_error(&st.err.pub);
  st.err.pub.error_exit = on_error;
  st.err.pub.emit_message = on_message;
  if (setjmp(st.err.jump)) {
    jpeg_destroy_compress(&st.cinfo);
    return false;
  }

  jpeg_create_compress(&st.cinfo);
  jpeg_mem_dest(&st.cinfo, &st.buffer, &st.length);
  st.cinfo.image_width = static_cast<JDIMENSION>(src.width);
  st.cinfo.image_height = static_cast<JDIMENSION>(src.height);
  st.cinfo.input_components = 3;
  st.cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&st.cinfo);
  jpeg_set_quality(&st.cinfo, quality, TRUE);
  // 4:2:0
  st.cinfo.comp_info[0].h_samp_factor = 2;
  st.cinfo.comp_info[0].v_samp_factor = 2;
  for (int i = 1; i < 3; ++i) {
    st.cinfo.comp_info[i].h_samp_factor = 1;
    st.cinfo.comp_info[i].v_samp_factor = 1;
  }
  st.cinfo.dct_method = JDCT_ISLOW;

  jpeg_start_compress(&st.cinfo, TRUE);
  const auto stride = static_cast<std::size_t>(src.width) * 3;
  while (st.cinfo.next_scanline < st.cinfo.image_height) {
    JSAMPROW row = const_cast<JSAMPROW>(src.data.data() + st.cinfo.next_scanline * stride);
    jpeg_write_scanlines(&st.cinfo, &row, 1);
  }
  jpeg_finish_compress(&st.cinfo);
  jpeg_destroy_compress(&st.cinfo);
  return true;
}

struct DecodeState {
  jpeg_decompress_struct cinfo{};
  ErrorManager err{};
};

bool decode_impl(DecodeState& st, std::span<const std::uint8_t> bytes, ImageU8& out) {
  st.cinfo.err = jpeg_std_error(&st.err.pub);
  st.err.pub.error_exit = on_error;
  st.err.pub.emit_message = on_message;
  if (setjmp(st.err.jump)) {
    jpeg_destroy_decompress(&st.cinfo);
    return false;
  }

  jpeg_create_decompress(&st.cinfo);
  jpeg_mem_src(&st.cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&st.cinfo, TRUE);
  st.cinfo.out_color_space = JCS_RGB;
  st.cinfo.dct_method = JDCT_ISLOW;
  jpeg_start_decompress(&st.cinfo);

  out = ImageU8(static_cast<int>(st.cinfo.output_width), static_cast<int>(st.cinfo.output_height));
  const auto stride = static_cast<std::size_t>(out.width) * 3;
  while (st.cinfo.output_scanline < st.cinfo.output_height) {
    JSAMPROW row = out.data.data() + st.cinfo.output_scanline * stride;
    jpeg_read_scanlines(&st.cinfo, &row, 1);
  }
  jpeg_finish_decompress(&st.cinfo);
  jpeg_destroy_decompress(&st.cinfo);
  return true;
}

}  // namespace

std::vector<std::uint8_t> encode_jpeg(const ImageU8& src, int quality) {
  if (src.channels != 3) throw InvalidArgument("encode_jpeg: expected RGB image");
  if (quality < kMinJpegQuality || quality > 100) throw InvalidArgument("encode_jpeg: quality out of range");

  EncodeState st;
  const bool ok = encode_impl(st, src, quality);
  std::vector<std::uint8_t> out;
  if (ok) out.assign(st.buffer, st.buffer + st.length);
  std::free(st.buffer);
  if (!ok) throw IoError(std::string("jpeg encode failed: ") + st.err.message);
  return out;
}

EncodedPayload encode_budget_jpeg(const ImageU8& src, std::size_t budget) {
  if (budget == 0) throw InvalidArgument("encode_budget_jpeg: budget must be positive");

  auto best = encode_jpeg(src, kMinJpegQuality);
  if (best.size() > budget) throw BudgetInfeasible(budget, best.size());

  int lo = kMinJpegQuality;  // feasible
  int hi = kMaxJpegQuality;
  while (lo < hi) {
    const int mid = lo + (hi - lo + 1) / 2;
    auto bytes = encode_jpeg(src, mid);
    if (bytes.size() <= budget) {
      lo = mid;
      best = std::move(bytes);
    } else {
      hi = mid - 1;
    }
  }

  EncodedPayload p;
  p.bytes = std::move(best);
  p.codec = Codec::Jpeg;
  p.quality = lo;
  p.source_width = src.width;
  p.source_height = src.height;
  p.budget = budget;
  return p;
}

ImageU8 decode_jpeg(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || bytes[0] != 0xFF || bytes[1] != 0xD8) throw DecodeError("not a JPEG stream");

  DecodeState st;
  ImageU8 out;
  if (!decode_impl(st, bytes, out)) throw DecodeError(std::string("jpeg decode failed: ") + st.err.message);
  if (st.err.pub.num_warnings > 0) throw DecodeError(std::string("corrupt jpeg stream: ") + st.err.message);
  return out;
}

ImageU8 decode_jpeg(const EncodedPayload& payload) {
  if (payload.codec != Codec::Jpeg) throw InvalidArgument("decode_jpeg: payload codec is not JPEG");
  auto img = decode_jpeg(std::span<const std::uint8_t>(payload.bytes));
  if (payload.source_width != 0 && (img.width != payload.source_width || img.height != payload.source_height))
    throw DecodeError("decoded dimensions differ from payload metadata");
  return img;
}

}  // namespace abyss::imaging
