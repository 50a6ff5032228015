from crossview import utils
from crossview.scene import make_synthetic_dataset
from crossview.trainer import TrainConfig, train, generate
from crossview.metrics import evaluate_generated
from crossview.viewer import Viewer

# Create a small synthetic dataset (aerial/ground pairs with segmentation maps)
make_synthetic_dataset(n=64, seed=0, size=64, out_dir="data/train")
make_synthetic_dataset(n=16, seed=1, size=64, out_dir="data/test", split="test")

train_set = utils.load_manifest("data/train")
test_set = utils.load_manifest("data/test")

# Train X-Fork (image + segmentation heads) aerial to ground
config = TrainConfig(arch="fork", direction="a2g", resolution=64, epochs=2, batch_size=8, out_dir="runs/fork")
artifacts = train(config, train_set, test_set)

# Generate the test split with the last checkpoint and score it
generated = generate(artifacts.checkpoints[-1], test_set, out_dir="runs/fork/generated")
report, per_image = evaluate_generated(generated, test_set)
print(report)

# Plot the loss curves (optional)
steps = [record for record in utils.load_records("runs/fork/log.jsonl") if record["event"] == "step"]
loss_viewer = Viewer(records=steps, smoothing=5)
loss_viewer.initialise_plotter()
loss_viewer.plot_losses()
loss_viewer.add_grid()
loss_viewer.add_legend()

# Save figure to image
loss_viewer.save_figure(path="Figures/", filename="fork_losses.png")

loss_viewer.show_plot()
