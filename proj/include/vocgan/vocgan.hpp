#pragma once

// Umbrella header.

#include "vocgan/adam.hpp"
#include "vocgan/audio.hpp"
#include "vocgan/checkpoint.hpp"
#include "vocgan/corpus.hpp"
#include "vocgan/discriminator.hpp"
#include "vocgan/fft.hpp"
#include "vocgan/generator.hpp"
#include "vocgan/losses.hpp"
#include "vocgan/mel.hpp"
#include "vocgan/metrics.hpp"
#include "vocgan/ops.hpp"
#include "vocgan/pitch.hpp"
#include "vocgan/stft.hpp"
#include "vocgan/trainer.hpp"
#include "vocgan/wav.hpp"
