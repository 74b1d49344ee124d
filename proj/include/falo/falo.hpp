#pragma once

#include "falo/backbone3d.hpp"
#include "falo/bench.hpp"
#include "falo/bev_backbone.hpp"
#include "falo/config.hpp"
#include "falo/conv2d.hpp"
#include "falo/det_head.hpp"
#include "falo/detection.hpp"
#include "falo/error.hpp"
#include "falo/flops.hpp"
#include "falo/kernels.hpp"
#include "falo/pipeline.hpp"
#include "falo/rng.hpp"
#include "falo/scene_io.hpp"
#include "falo/serializer.hpp"
#include "falo/tensor.hpp"
#include "falo/voxelizer.hpp"
#include "falo/weights.hpp"
