#pragma once

#include <string>

#include "unclean/image.hpp"

namespace unclean {

// N-class Gaussian-blob dataset with per-class gratings. Rendering uses only
// exact float arithmetic plus det_exp, so the same spec yields byte-identical
// data on any machine.
struct SyntheticSpec {
  int classes = 5;
  int h = 16, w = 16, chans = 1;
  int train_per_class = 64;
  int test_per_class = 16;
  uint64_t seed = 1;
  double blob_sigma = 2.2;   // blob radius in pixels
  double jitter = 1.6;       // center jitter in pixels
  double noise = 0.03;       // additive uniform pixel noise
  double grating_amp = 0.25; // strength of the per-class grating texture
};

Dataset make_synthetic(const SyntheticSpec& spec);

// Raw (un-gzipped) IDX files in `dir`: train-images-idx3-ubyte,
// train-labels-idx1-ubyte, t10k-images-idx3-ubyte, t10k-labels-idx1-ubyte.
// A .fnv sidecar is written on first load and checked afterwards; a mismatch
// or missing file raises DependencyError with a retry hint.
Dataset load_mnist(const std::string& dir);

// Parsed form of the config's dataset entry.
struct DatasetSpec {
  std::string kind;  // "synthetic" or "mnist"
  SyntheticSpec synth;
  std::string path;  // mnist: directory with the IDX files
};

// Text form: "synthetic" / "synthetic:classes=4,h=16,w=16,per_class=200,seed=1"
// or "mnist:<dir>" (default dir "data/mnist"). Unknown names are rejected.
DatasetSpec parse_dataset_spec(const std::string& text);

Dataset ingest_dataset(const DatasetSpec& spec);

}  // namespace unclean
