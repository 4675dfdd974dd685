# coding: utf-8

# # Clipped errors
#
# The regression loss reports plain MSE. The error that is backpropagated is
# squashed through a logistic, so one badly wrong pixel cannot dominate the
# update.

# In[1]:

import numpy as np

from dcmeseg import LossConfig, clip_error, clip_error_grad, decoder_loss, sample_count
from dcmeseg.loss import decoder_loss_unclipped
from dcmeseg.loss import BatchShape

cfg = LossConfig(amplitude=4.0)
for x in (-50, -5, -1, 0, 1, 5, 50):
    print(f"x={x:4d}  clipped={clip_error(x, cfg):+.4f}  slope={clip_error_grad(x, cfg):.4f}")


# A batch of six 128x256 fields has two outputs per pixel.

# In[2]:

print(sample_count(BatchShape(6, 128, 256)))


# One outlier among small errors: the raw gradient is dominated by it, the
# clipped one is not.

# In[3]:

target = np.zeros((1, 2, 8, 8))
pred = np.random.default_rng(1).normal(0, 0.1, target.shape)
pred[0, 0, 3, 3] = 40.0
raw = decoder_loss_unclipped(target, pred)
clipped = decoder_loss(target, pred, cfg)
print("reported loss", raw.reported_loss, clipped.reported_loss)
print("largest gradient share, raw    ", np.abs(raw.gradient).max() / np.abs(raw.gradient).sum())
print("largest gradient share, clipped", np.abs(clipped.gradient).max() / np.abs(clipped.gradient).sum())
