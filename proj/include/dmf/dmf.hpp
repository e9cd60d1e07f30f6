#pragma once

// Umbrella header. eval/figure.hpp additionally needs libpng (the dmf_figure target).

#include "dmf/core/error.hpp"
#include "dmf/core/tensor.hpp"
#include "dmf/data/batch.hpp"
#include "dmf/data/corpus.hpp"
#include "dmf/data/manifest.hpp"
#include "dmf/data/resample.hpp"
#include "dmf/data/synth.hpp"
#include "dmf/eval/figure.hpp"
#include "dmf/eval/metrics.hpp"
#include "dmf/eval/report.hpp"
#include "dmf/frontend/bands.hpp"
#include "dmf/frontend/compression.hpp"
#include "dmf/frontend/config.hpp"
#include "dmf/frontend/fft.hpp"
#include "dmf/frontend/spectrogram.hpp"
#include "dmf/frontend/stft.hpp"
#include "dmf/frontend/wav.hpp"
#include "dmf/model/checkpoint.hpp"
#include "dmf/model/config.hpp"
#include "dmf/model/dmf_net.hpp"
#include "dmf/nn/blocks.hpp"
#include "dmf/nn/config.hpp"
#include "dmf/nn/layers.hpp"
#include "dmf/nn/multiframe.hpp"
#include "dmf/nn/param.hpp"
#include "dmf/nn/subnets.hpp"
#include "dmf/objectives/losses.hpp"
#include "dmf/train/objective.hpp"
#include "dmf/train/optimizer.hpp"
#include "dmf/train/stage.hpp"
