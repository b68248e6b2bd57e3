#include "conseg/preprocess.hpp"

#include <cmath>

#include "conseg/rng.hpp"
#include "conseg/staple.hpp"

namespace conseg {

Volume normalize_intensity(const Volume& vol, float lo, float hi) {
  if (!(lo < hi)) throw OutOfRange("normalize_intensity: lo must be < hi");
  const float vmin = vol.data().minCoeff();
  const float vmax = vol.data().maxCoeff();
  if (vmin == vmax)
    throw ConstantVolume("normalize_intensity: volume has a single intensity value");

  Volume out = make_volume(vol.dims(), vol.spacing, ValueKind::Intensity);
  // Convex form lo*(1-t) + hi*t hits both endpoints exactly.
  const double span = static_cast<double>(vmax) - static_cast<double>(vmin);
  for (Eigen::Index i = 0; i < vol.data().size(); ++i) {
    const double t = (static_cast<double>(vol.data()[i]) - vmin) / span;
    out.data()[i] = static_cast<float>(static_cast<double>(lo) * (1.0 - t) +
                                       static_cast<double>(hi) * t);
  }
  return out;
}

std::vector<Patch> sample_patches(const Volume& vol, const Volume& brain, Axis axis,
                                  const PatchSpec& spec) {
  require_same_shape(vol, brain, "sample_patches");
  require_kind(brain, ValueKind::Binary, "sample_patches");
  if (spec.height < 1 || spec.width < 1)
    throw ConfigError("sample_patches: patch size components must be >= 1");
  if (spec.patches_per_slice < 1)
    throw ConfigError("sample_patches: patches_per_slice must be >= 1");

  const Eigen::Index n_slices = vol.dims()[axis];
  std::vector<Patch> out;
  for (Eigen::Index k = 0; k < n_slices; ++k) {
    const SlicePlane mask_slice = extract_slice(brain, axis, k);
    if ((mask_slice.values != 0.0f).count() == 0) continue;

    const Eigen::Index rows = mask_slice.values.rows();
    const Eigen::Index cols = mask_slice.values.cols();
    if (spec.height > rows || spec.width > cols)
      throw PatchTooLarge("sample_patches: patch " + std::to_string(spec.height) + "x" +
                          std::to_string(spec.width) + " exceeds slice " +
                          std::to_string(rows) + "x" + std::to_string(cols));

    const SlicePlane img_slice = extract_slice(vol, axis, k);
    SplitMix64 rng(derive_key(spec.seed, static_cast<std::uint64_t>(axis),
                              static_cast<std::uint64_t>(k)));
    for (int i = 0; i < spec.patches_per_slice; ++i) {
      Patch patch;
      patch.origin.axis = axis;
      patch.origin.slice = k;
      patch.origin.row0 = static_cast<Eigen::Index>(
          rng.next_below(static_cast<std::uint64_t>(rows - spec.height + 1)));
      patch.origin.col0 = static_cast<Eigen::Index>(
          rng.next_below(static_cast<std::uint64_t>(cols - spec.width + 1)));
      patch.pixels =
          img_slice.values.block(patch.origin.row0, patch.origin.col0, spec.height, spec.width);
      patch.mask_pixels =
          mask_slice.values.block(patch.origin.row0, patch.origin.col0, spec.height, spec.width);
      out.push_back(std::move(patch));
    }
  }
  return out;
}

Volume fuse_triplanar(const Volume& p_ax, const Volume& p_cor, const Volume& p_sag) {
  require_same_shape(p_ax, p_cor, "fuse_triplanar");
  require_same_shape(p_ax, p_sag, "fuse_triplanar");
  for (const Volume* v : {&p_ax, &p_cor, &p_sag}) {
    require_kind(*v, ValueKind::Probability, "fuse_triplanar");
    if ((v->data() < 0.0f).any() || (v->data() > 1.0f).any())
      throw OutOfRange("fuse_triplanar: probabilities must lie in [0,1]");
  }
  Volume out = make_volume(p_ax.dims(), p_ax.spacing, ValueKind::Probability);
  for (Eigen::Index i = 0; i < out.data().size(); ++i) {
    const double s = static_cast<double>(p_ax.data()[i]) + static_cast<double>(p_cor.data()[i]) +
                     static_cast<double>(p_sag.data()[i]);
    out.data()[i] = static_cast<float>(s / 3.0);
  }
  return out;
}

Volume threshold_prob(const Volume& p, double t) {
  require_kind(p, ValueKind::Probability, "threshold_prob");
  return binarize(p, t);
}

std::vector<AutoContextSlice> stack_autocontext(const Volume& p_ax, const Volume& p_cor,
                                                const Volume& p_sag) {
  require_same_shape(p_ax, p_cor, "stack_autocontext");
  require_same_shape(p_ax, p_sag, "stack_autocontext");
  std::vector<AutoContextSlice> out;
  const Eigen::Index n = p_ax.dims().nx;
  out.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    AutoContextSlice s;
    s.slice = k;
    s.channels[0] = extract_slice(p_ax, Axis::X, k).values;
    s.channels[1] = extract_slice(p_cor, Axis::X, k).values;
    s.channels[2] = extract_slice(p_sag, Axis::X, k).values;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace conseg
