#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "noisecodec/container.hpp"
#include "noisecodec/evaluate.hpp"
#include "noisecodec/metrics.hpp"
#include "noisecodec/noise.hpp"
#include "noisecodec/train.hpp"

namespace py = pybind11;
using nc::img::ImageBuffer;
using nc::net::CodecModel;

namespace {

// Images cross the boundary as float32 arrays of shape (3, H, W) in [0, 1],
// matching the planar layout used internally.
py::array_t<float> to_array(const ImageBuffer& img) {
  py::array_t<float> out({int64_t{3}, img.height, img.width});
  std::copy(img.data.begin(), img.data.end(), out.mutable_data());
  return out;
}

ImageBuffer from_array(const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 3 || a.shape(0) != 3)
    throw std::invalid_argument("expected a float array of shape (3, H, W)");
  ImageBuffer img;
  img.height = a.shape(1);
  img.width = a.shape(2);
  img.data.assign(a.data(), a.data() + a.size());
  return img;
}

py::array_t<float> tensor_to_array(const nc::Tensor<float>& t) {
  const auto s = t.shape();
  py::array_t<float> out({s.c, s.h, s.w});
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_noisecodec, m) {
  m.doc() = "joint denoising and lossy image compression codec";

  py::class_<CodecModel>(m, "Model")
      .def_static("load", &nc::net::load_checkpoint, py::arg("path"))
      .def("save", [](const CodecModel& self, const std::string& path) {
        nc::net::save_checkpoint(path, self);
      }, py::arg("path"))
      .def_property_readonly("quality", &CodecModel::quality)
      .def_property_readonly("metric", [](const CodecModel& self) {
        return std::string(nc::net::metric_name(self.metric()));
      })
      .def("compress",
           [](const CodecModel& self, const py::array_t<float>& image) {
             auto img = from_array(image);
             nc::net::CompressResult res;
             {
               py::gil_scoped_release release;
               res = nc::net::compress_image(img, self);
             }
             return py::make_tuple(
                 py::bytes(reinterpret_cast<const char*>(res.stream.data()),
                           res.stream.size()),
                 to_array(res.recon), res.est_bits);
           },
           py::arg("image"),
           "Encode an image array; returns (stream, reconstruction, estimated bits).")
      .def("decompress",
           [](const CodecModel& self, const py::bytes& stream) {
             std::string_view sv = stream;
             std::vector<uint8_t> bytes(sv.begin(), sv.end());
             ImageBuffer out;
             {
               py::gil_scoped_release release;
               out = nc::net::decompress_stream(bytes, self);
             }
             return to_array(out);
           },
           py::arg("stream"))
      .def("compress_file",
           [](const CodecModel& self, const std::string& image, const std::string& out) {
             py::gil_scoped_release release;
             nc::net::compress_file(image, out, self);
           },
           py::arg("image_path"), py::arg("stream_path"))
      .def("decompress_file",
           [](const CodecModel& self, const std::string& in, const std::string& image) {
             py::gil_scoped_release release;
             nc::net::decompress_file(in, image, self);
           },
           py::arg("stream_path"), py::arg("image_path"));

  m.def("read_image",
        [](const std::string& path) { return to_array(nc::img::read_image(path)); },
        py::arg("path"));
  m.def("write_image",
        [](const std::string& path, const py::array_t<float>& image) {
          nc::img::write_image(path, from_array(image));
        },
        py::arg("path"), py::arg("image"));

  m.def("psnr",
        [](const py::array_t<float>& a, const py::array_t<float>& b) {
          return nc::metrics::psnr(from_array(a), from_array(b));
        },
        py::arg("a"), py::arg("b"));
  m.def("ms_ssim",
        [](const py::array_t<float>& a, const py::array_t<float>& b, int scales) {
          return nc::metrics::ms_ssim(from_array(a), from_array(b), scales);
        },
        py::arg("a"), py::arg("b"), py::arg("scales") = 0);
  m.def("ms_ssim_db", &nc::metrics::ms_ssim_db, py::arg("value"));

  m.def("synth_noise",
        [](const py::array_t<float>& image, int gain, uint64_t seed) {
          auto img = from_array(image);
          img.data = nc::noise::synthesize_noise(img.data,
                                                 nc::noise::gain_preset(gain), seed);
          return to_array(img);
        },
        py::arg("image"), py::arg("gain") = 4, py::arg("seed") = 0,
        "Camera noise at a gain preset (1, 2, 4, or 8).");

  m.def("texture_corpus",
        [](int64_t count, int64_t patch, uint64_t seed) {
          py::list out;
          for (const auto& t : nc::train::make_texture_corpus(count, patch, seed))
            out.append(tensor_to_array(t));
          return out;
        },
        py::arg("count"), py::arg("patch") = 64, py::arg("seed") = 0,
        "Synthetic textured training patches as (3, patch, patch) arrays.");

  m.def("evaluate_rd",
        [](const std::vector<std::string>& images,
           const std::vector<std::string>& checkpoints, const std::vector<int>& presets,
           uint64_t seed) {
          nc::eval::EvalRun run;
          {
            py::gil_scoped_release release;
            run = nc::eval::evaluate_rd(images, checkpoints, presets, seed);
          }
          return py::make_tuple(nc::eval::render_csv(run.records), run.failures);
        },
        py::arg("images"), py::arg("checkpoints"), py::arg("presets"),
        py::arg("seed") = 0,
        "Rate-distortion sweep; returns (csv text, failure count).");
}
