#pragma once

#include "sfwm/common.hpp"
#include "sfwm/dataset.hpp"
#include "sfwm/detector.hpp"
#include "sfwm/evalharness.hpp"
#include "sfwm/image.hpp"
#include "sfwm/image_io.hpp"
#include "sfwm/imageops.hpp"
#include "sfwm/io.hpp"
#include "sfwm/jpeg.hpp"
#include "sfwm/layers.hpp"
#include "sfwm/models.hpp"
#include "sfwm/postprocess.hpp"
#include "sfwm/scheduler.hpp"
#include "sfwm/synthetic.hpp"
#include "sfwm/tensor.hpp"
#include "sfwm/trainer.hpp"
#include "sfwm/watermark.hpp"
