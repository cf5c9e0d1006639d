import math

import numpy as np
import pytest

from safepred import data, nets, predictors, sim


def synthetic_window_dataset(n, m=2, side=4, k=1, kind=data.KIND_OBS_CONTROLLER, seed=0):
    """Separable toy task: label 1 iff the window's mean intensity is high."""
    rng = np.random.default_rng(seed)
    samples = []
    for i in range(n):
        bright = i % 2 == 0
        base = 0.8 if bright else 0.2
        window = tuple(
            np.clip(base + rng.normal(0, 0.05, (side, side)), 0, 1) for _ in range(m)
        )
        samples.append(
            data.Sample(
                window=window,
                actions=(1,) * m if kind == data.KIND_OBS_ACTION else None,
                label=int(bright),
                horizon=k,
                controller_id=0,
                traj_id=i,
            )
        )
    return data.Dataset(kind, tuple(samples), m, k)


def episode_images(n_episodes, seed):
    """Frames and per-frame safety labels from noisy-controller episodes."""
    ctrl = sim.default_controllers()[1]
    rng = np.random.default_rng(seed)
    trajs = []
    for i in range(n_episodes):
        trajs.append(
            sim.run_episode(ctrl, sim.sample_initial_state(rng), max_len=70, seed=seed * 1000 + i)
        )
    return data.build_image_labels(trajs)


QUICK = nets.TrainConfig(learning_rate=0.01, batch_size=32, max_epochs=40, seed=0)


class TestMonolithic:
    def test_learns_separable_task(self):
        ds = synthetic_window_dataset(400)
        pred, history = predictors.train_monolithic(ds, QUICK, hidden=(8,))
        test = synthetic_window_dataset(100, seed=99)
        scores = predictors.dataset_scores(pred, test)
        acc = ((scores > 0.5).astype(int) == test.labels()).mean()
        assert acc > 0.95
        assert history[-1] < history[0]

    def test_empty_dataset_rejected(self):
        ds = data.Dataset(data.KIND_OBS_CONTROLLER, (), 2, 1)
        with pytest.raises(ValueError):
            predictors.train_monolithic(ds, QUICK)

    def test_seeded_determinism(self):
        ds = synthetic_window_dataset(60)
        a, _ = predictors.train_monolithic(ds, QUICK, hidden=(6,))
        b, _ = predictors.train_monolithic(ds, QUICK, hidden=(6,))
        for la, lb in zip(a.net.layers, b.net.layers):
            assert np.array_equal(la.weights, lb.weights)

    def test_actions_appended_for_independent(self):
        ds = synthetic_window_dataset(40, kind=data.KIND_OBS_ACTION)
        pred, _ = predictors.train_monolithic(ds, QUICK, hidden=(4,))
        assert not pred.controller_specific
        assert pred.net.input_dim == 2 * 16 + 2


class TestPredictSurface:
    def hand_monolithic(self, logits):
        """m=1 predictor over 2x2 frames whose output is constant `logits`."""
        net = nets.DenseNet(
            [nets.Layer(np.zeros((4, 2)), np.array(logits, dtype=float), "identity")]
        )
        return predictors.MonolithicPredictor(net=net, m=1, k=1, controller_specific=True)

    def test_tie_resolves_unsafe(self):
        pred = self.hand_monolithic([0.0, 0.0])
        window = [np.zeros((2, 2))]
        assert predictors.predict_score(pred, window) == 0.5
        assert predictors.predict_label(pred, window) == 0

    def test_softmax_arithmetic(self):
        pred = self.hand_monolithic([0.0, math.log(3.0)])
        window = [np.zeros((2, 2))]
        assert predictors.predict_score(pred, window) == pytest.approx(0.75)
        assert predictors.predict_label(pred, window) == 1

    def test_label_iff_score_above_half(self):
        ds = synthetic_window_dataset(100)
        pred, _ = predictors.train_monolithic(ds, QUICK, hidden=(5,))
        scores = predictors.dataset_scores(pred, ds)
        for s, sample in zip(scores, ds.samples):
            label = predictors.predict_label(pred, sample.window)
            assert label == (1 if s > 0.5 else 0)

    def test_window_length_checked(self):
        pred = self.hand_monolithic([0.0, 0.0])
        with pytest.raises(ValueError):
            predictors.predict_score(pred, [np.zeros((2, 2))] * 3)

    def test_scores_in_unit_interval(self):
        ds = synthetic_window_dataset(50)
        pred, _ = predictors.train_monolithic(ds, QUICK, hidden=(4,))
        scores = predictors.dataset_scores(pred, ds)
        assert np.all((scores >= 0) & (scores <= 1))


class TestImageForecaster:
    def frozen_scene_pairs(self, n_scenes=3, repeats=20, side=6, m=3):
        # frozen-simulator hook: each scene never moves, so the correct
        # forecast is the last input frame
        rng = np.random.default_rng(1)
        scenes = [(rng.random((side, side)) > 0.5).astype(float) for _ in range(n_scenes)]
        return [
            data.ForecastSample(window=(s,) * m, actions=None, target=s)
            for s in scenes
            for _ in range(repeats)
        ]

    def test_static_scene_predicts_last_frame(self):
        pairs = self.frozen_scene_pairs()
        cfg = nets.TrainConfig(learning_rate=0.01, batch_size=16, max_epochs=150, seed=2)
        fc, _ = predictors.train_image_forecaster(pairs, cfg, hidden=(24,))
        errs = []
        for p in pairs[:20]:
            out = fc.forecast(predictors.flatten_window(p.window)[None, :])[0]
            errs.append(np.abs(out - p.target.ravel()).mean())
        assert np.mean(errs) < 0.05

    def test_output_range(self):
        pairs = self.frozen_scene_pairs(repeats=4)
        cfg = nets.TrainConfig(learning_rate=0.01, max_epochs=2, seed=3)
        fc, _ = predictors.train_image_forecaster(pairs, cfg, hidden=(8,))
        rng = np.random.default_rng(4)
        out = fc.forecast(rng.normal(size=(5, fc.net.input_dim)))
        assert np.all((out >= 0) & (out <= 1))

    def test_seeded_determinism(self):
        pairs = self.frozen_scene_pairs(repeats=7)
        cfg = nets.TrainConfig(learning_rate=0.01, max_epochs=5, seed=6)
        a, _ = predictors.train_image_forecaster(pairs, cfg, hidden=(8,))
        b, _ = predictors.train_image_forecaster(pairs, cfg, hidden=(8,))
        for la, lb in zip(a.net.layers, b.net.layers):
            assert np.array_equal(la.weights, lb.weights)

    def test_empty_pairs_rejected(self):
        with pytest.raises(ValueError):
            predictors.train_image_forecaster([], QUICK)


class TestAutoencoder:
    def small_images(self, n=80, side=8, seed=5):
        rng = np.random.default_rng(seed)
        images = []
        labels = []
        for i in range(n):
            img = np.zeros((side, side))
            col = int(rng.integers(0, side))
            img[:, col] = 1.0
            images.append(img)
            labels.append(col % 2)
        return images, np.array(labels)

    def test_overcomplete_reconstruction(self):
        # test hook: latent as wide as the image, no regularization
        images, labels = self.small_images()
        cfg = nets.TrainConfig(
            learning_rate=4e-3, batch_size=16, max_epochs=500, seed=7,
            patience_epochs=20, early_stop_patience=60,
        )
        ae, history = predictors.train_autoencoder(
            images, labels, None, cfg, latent_dim=64, lambda_latent=0.0,
            lambda_safety=0.0, hidden=128,
        )
        assert ae.reconstruction_mse(images) < 0.01
        assert all(np.isfinite(h) for h in history)

    def test_kl_of_standard_normal_is_zero(self):
        mean = np.zeros((5, 8))
        log_var = np.zeros((5, 8))
        assert predictors.kl_standard_normal(mean, log_var) == 0.0

    def test_kl_positive_otherwise(self):
        assert predictors.kl_standard_normal(np.ones((2, 3)), np.zeros((2, 3))) > 0

    def test_default_safety_weight_is_pixel_count(self):
        images, labels = self.small_images(n=24)
        ev = predictors.Evaluator(
            kind="learned", net=nets.make_net([64, 4, 2], ["relu", "identity"], seed=0)
        )
        cfg = nets.TrainConfig(learning_rate=1e-4, max_epochs=1, seed=8)
        ae, _ = predictors.train_autoencoder(images, labels, ev, cfg, latent_dim=4)
        assert ae.lambda_safety == 64.0

    def test_safety_loss_requires_evaluator(self):
        images, labels = self.small_images(n=10)
        with pytest.raises(ValueError):
            predictors.train_autoencoder(
                images, labels, None, nets.TrainConfig(max_epochs=1, seed=0), latent_dim=2
            )

    def test_negative_weights_rejected(self):
        images, labels = self.small_images(n=10)
        with pytest.raises(ValueError):
            predictors.train_autoencoder(
                images, labels, None, nets.TrainConfig(max_epochs=1, seed=0),
                latent_dim=2, lambda_latent=-1.0, lambda_safety=0.0,
            )

    def test_seeded_determinism(self):
        images, labels = self.small_images(n=20)
        cfg = nets.TrainConfig(learning_rate=1e-3, max_epochs=4, seed=9)
        a, ha = predictors.train_autoencoder(
            images, labels, None, cfg, latent_dim=3, lambda_safety=0.0
        )
        b, hb = predictors.train_autoencoder(
            images, labels, None, cfg, latent_dim=3, lambda_safety=0.0
        )
        assert ha == hb
        assert np.array_equal(a.encoder.layers[0].weights, b.encoder.layers[0].weights)


class TestLatentForecaster:
    def test_constant_scene_learned(self):
        rng = np.random.default_rng(10)
        images = [(rng.random((6, 6)) > 0.5).astype(float) for _ in range(8)]
        labels = np.zeros(8, dtype=int)
        cfg = nets.TrainConfig(learning_rate=2e-3, batch_size=8, max_epochs=200, seed=11)
        ae, _ = predictors.train_autoencoder(
            images, labels, None, cfg, latent_dim=4, lambda_latent=0.0, lambda_safety=0.0, hidden=32
        )
        pairs = [
            data.ForecastSample(window=(img,) * 2, actions=None, target=img)
            for img in images
            for _ in range(10)
        ]
        lf, _ = predictors.train_latent_forecaster(
            pairs,
            ae,
            nets.TrainConfig(
                learning_rate=1e-2, batch_size=16, max_epochs=800, seed=12,
                patience_epochs=25, early_stop_patience=80,
            ),
        )
        errs = []
        for img in images:
            z = ae.encode(predictors.images_matrix([img]))
            errs.append(np.linalg.norm(lf.forecast(np.tile(z, 2)) - z))
        assert np.mean(errs) < 0.05

    def test_dimension_mismatch_rejected(self):
        rng = np.random.default_rng(13)
        images = [rng.random((4, 4)) for _ in range(8)]
        ae, _ = predictors.train_autoencoder(
            images, np.zeros(8, dtype=int), None,
            nets.TrainConfig(max_epochs=1, seed=0), latent_dim=2, lambda_safety=0.0,
        )
        bad_pairs = [
            data.ForecastSample(
                window=(rng.random((6, 6)),) * 2, actions=None, target=rng.random((6, 6))
            )
        ]
        with pytest.raises(ValueError):
            predictors.train_latent_forecaster(bad_pairs, ae, nets.TrainConfig(max_epochs=1, seed=0))


class TestEvaluators:
    def training_set(self):
        images, labels = episode_images(60, seed=20)
        return data.rebalance_image_labels(images, labels, seed=1)

    def test_learned_evaluator_accuracy_on_clean_renders(self):
        images, labels = self.training_set()
        cfg = nets.TrainConfig(learning_rate=5e-3, batch_size=128, max_epochs=150, seed=21)
        ev, _ = predictors.train_evaluator(images, labels, augment=False, cfg=cfg, hidden=(48,))
        test_images, test_labels = episode_images(10, seed=77)
        acc = (ev.labels(predictors.images_matrix(test_images)) == test_labels).mean()
        assert acc >= 0.95

    def test_augmentation_improves_inverted_accuracy(self):
        images, labels = self.training_set()
        cfg = nets.TrainConfig(learning_rate=5e-3, batch_size=128, max_epochs=150, seed=24)
        plain, _ = predictors.train_evaluator(images, labels, augment=False, cfg=cfg, hidden=(48,))
        augmented, _ = predictors.train_evaluator(images, labels, augment=True, cfg=cfg, hidden=(48,))
        test_images, test_labels = episode_images(10, seed=78)
        inverted = 1.0 - predictors.images_matrix(test_images)
        acc_plain = (plain.labels(inverted) == test_labels).mean()
        acc_aug = (augmented.labels(inverted) == test_labels).mean()
        assert acc_aug >= acc_plain

    def test_learned_requires_net(self):
        with pytest.raises(ValueError):
            predictors.Evaluator(kind="learned", net=None)

    def test_augment_image_stays_in_range(self):
        rng = np.random.default_rng(26)
        for _ in range(50):
            img = rng.random((8, 8))
            out = predictors.augment_image(img, rng)
            assert out.shape == img.shape
            assert np.all((out >= 0) & (out <= 1))


class TestRobustEvaluate:
    def test_upright_safe(self):
        img = sim.render_observation(sim.SystemState(0, 0, 0, 0))
        assert predictors.robust_evaluate(img) == 1

    def test_ten_degrees_unsafe(self):
        img = sim.render_observation(sim.SystemState(0, 0, math.radians(10), 0))
        assert predictors.robust_evaluate(img) == 0

    def test_inverted_image_handled(self):
        img = sim.render_observation(sim.SystemState(0, 0, 0, 0))
        assert predictors.robust_evaluate(1.0 - img) == 1
        unsafe = sim.render_observation(sim.SystemState(0.4, 0, 0.3, 0))
        assert predictors.robust_evaluate(1.0 - unsafe) == 0

    def test_blank_image_conservative(self):
        assert predictors.robust_evaluate(np.ones((32, 32))) == 0

    def test_boundary_angle_safe(self):
        img = sim.render_observation(sim.SystemState(0, 0, sim.SAFE_ANGLE, 0))
        assert predictors.robust_evaluate(img) == 1

    def test_matches_predicate_on_sweep(self):
        # smaller version of the acceptance sweep
        for cart_pos in (-0.5, 0.5):
            for theta in np.linspace(-sim.ACTIVITY_ANGLE, sim.ACTIVITY_ANGLE, 125):
                state = sim.SystemState(cart_pos, 0, float(theta), 0)
                got = predictors.robust_evaluate(sim.render_observation(state))
                assert got == sim.safety_of_state(state), math.degrees(theta)


class TestComposites:
    def make_parts(self, side=4, m=2):
        rng = np.random.default_rng(30)
        fnet = nets.make_net([m * side * side, 8, side * side], ["relu", "sigmoid"], seed=31)
        forecaster = predictors.ImageForecaster(net=fnet, m=m, with_actions=False)
        enet = nets.make_net([side * side, 4, 2], ["relu", "identity"], seed=32)
        evaluator = predictors.Evaluator(kind="learned", net=enet)
        return forecaster, evaluator

    def test_zero_horizon_equals_evaluator_on_last_frame(self):
        forecaster, evaluator = self.make_parts()
        pred = predictors.CompositeImagePredictor(
            forecaster=forecaster, evaluator=evaluator, m=2, k=0, controller_specific=True
        )
        rng = np.random.default_rng(33)
        window = [rng.random((4, 4)) for _ in range(2)]
        got = predictors.predict_score(pred, window)
        want = float(evaluator.scores(window[-1].ravel()[None, :])[0])
        assert got == pytest.approx(want)

    def test_rollout_uses_exactly_k_applications(self):
        forecaster, evaluator = self.make_parts()
        rng = np.random.default_rng(34)
        window = [rng.random((4, 4)) for _ in range(2)]
        for k in (1, 3, 7):
            forecaster.calls = 0
            pred = predictors.CompositeImagePredictor(
                forecaster=forecaster, evaluator=evaluator, m=2, k=k, controller_specific=True
            )
            predictors.predict_score(pred, window)
            assert forecaster.calls == k

    def test_latent_rollout_counter(self):
        rng = np.random.default_rng(35)
        images = [rng.random((4, 4)) for _ in range(10)]
        ae, _ = predictors.train_autoencoder(
            images, np.zeros(10, dtype=int), None,
            nets.TrainConfig(max_epochs=1, seed=0), latent_dim=2, lambda_safety=0.0,
        )
        lnet = nets.make_net([4, 2], ["identity"], seed=36)
        lf = predictors.LatentForecaster(net=lnet, m=2, with_actions=False)
        enet = nets.make_net([16, 2], ["identity"], seed=37)
        pred = predictors.CompositeLatentPredictor(
            autoencoder=ae,
            forecaster=lf,
            evaluator=predictors.Evaluator(kind="learned", net=enet),
            m=2,
            k=4,
            controller_specific=True,
        )
        window = [rng.random((4, 4)) for _ in range(2)]
        predictors.predict_score(pred, window)
        assert lf.calls == 4

    def test_robust_evaluator_gives_binary_scores(self):
        evaluator = predictors.Evaluator(kind="robust_feature")
        images = np.stack([
            sim.render_observation(sim.SystemState(0, 0, 0, 0)).ravel(),
            sim.render_observation(sim.SystemState(0, 0, 0.3, 0)).ravel(),
        ])
        scores = evaluator.scores(images)
        assert list(scores) == [1.0, 0.0]

    def test_action_windows_roll_forward(self):
        side, m = 4, 2
        fnet = nets.make_net([m * side * side + m, 8, side * side], ["relu", "sigmoid"], seed=40)
        forecaster = predictors.ImageForecaster(net=fnet, m=m, with_actions=True)
        enet = nets.make_net([side * side, 2], ["identity"], seed=41)
        pred = predictors.CompositeImagePredictor(
            forecaster=forecaster,
            evaluator=predictors.Evaluator(kind="learned", net=enet),
            m=m,
            k=3,
            controller_specific=False,
        )
        rng = np.random.default_rng(42)
        window = [rng.random((4, 4)) for _ in range(2)]
        score = predictors.predict_score(pred, window, actions=(-1, 1))
        assert 0.0 <= score <= 1.0


class TestEndToEnd:
    def test_trained_predictor_rejects_clearly_unsafe_windows(self):
        # windows whose future state is far past the safety boundary must be
        # predicted unsafe by a trained monolithic model
        ctrl = sim.ControllerSpec(kind="bang_bang", gains=(1.0, 0.3), noise_prob=0.6, id=2)
        rng = np.random.default_rng(90)
        m, k = 5, 1
        samples, future_angles = [], []
        for i in range(80):
            traj = sim.run_episode(ctrl, sim.sample_initial_state(rng), max_len=40, seed=9000 + i)
            if len(traj) < m + k:
                continue
            for idx, s in enumerate(data.build_windows(traj, m, k, data.KIND_OBS_CONTROLLER, traj_id=i)):
                samples.append(s)
                future_angles.append(abs(traj.steps[idx + m - 1 + k].state.pole_angle))
        ds = data.rebalance(
            data.Dataset(data.KIND_OBS_CONTROLLER, tuple(samples), m, k), seed=4
        )
        cfg = nets.TrainConfig(learning_rate=3e-3, batch_size=128, max_epochs=50, seed=6)
        pred, _ = predictors.train_monolithic(ds, cfg)

        clear = [s for s, a in zip(samples, future_angles) if a > math.radians(15)]
        assert len(clear) >= 20
        labels = [predictors.predict_label(pred, s.window) for s in clear]
        assert np.mean(labels) <= 0.1  # nearly all predicted unsafe


class TestBundles:
    def test_monolithic_round_trip(self, tmp_path):
        ds = synthetic_window_dataset(40)
        pred, _ = predictors.train_monolithic(ds, QUICK, hidden=(4,))
        path = tmp_path / "mono.json"
        predictors.save_predictor(pred, path)
        loaded = predictors.load_predictor(path)
        assert isinstance(loaded, predictors.MonolithicPredictor)
        assert (loaded.m, loaded.k, loaded.controller_specific) == (pred.m, pred.k, True)
        window = ds.samples[0].window
        assert predictors.predict_score(loaded, window) == pytest.approx(
            predictors.predict_score(pred, window)
        )

    def test_composite_image_round_trip(self, tmp_path):
        rng = np.random.default_rng(50)
        fnet = nets.make_net([32, 4, 16], ["relu", "sigmoid"], seed=51)
        enet = nets.make_net([16, 2], ["identity"], seed=52)
        pred = predictors.CompositeImagePredictor(
            forecaster=predictors.ImageForecaster(net=fnet, m=2, with_actions=False),
            evaluator=predictors.Evaluator(kind="learned", net=enet, augmentation=True),
            m=2,
            k=3,
            controller_specific=True,
        )
        path = tmp_path / "ci.json"
        predictors.save_predictor(pred, path)
        loaded = predictors.load_predictor(path)
        window = [rng.random((4, 4)) for _ in range(2)]
        assert predictors.predict_score(loaded, window) == pytest.approx(
            predictors.predict_score(pred, window)
        )
        assert loaded.evaluator.augmentation is True

    def test_composite_latent_round_trip(self, tmp_path):
        rng = np.random.default_rng(53)
        enc = nets.make_net([16, 8], ["identity"], seed=54)
        dec = nets.make_net([4, 16], ["sigmoid"], seed=55)
        ae = predictors.SafetyAutoencoder(
            encoder=enc, decoder=dec, latent_dim=4, lambda_latent=1.0, lambda_safety=16.0
        )
        pred = predictors.CompositeLatentPredictor(
            autoencoder=ae,
            forecaster=predictors.LatentForecaster(
                net=nets.make_net([8, 4], ["identity"], seed=56), m=2, with_actions=False
            ),
            evaluator=predictors.Evaluator(kind="robust_feature"),
            m=2,
            k=2,
            controller_specific=True,
        )
        path = tmp_path / "cl.json"
        predictors.save_predictor(pred, path)
        loaded = predictors.load_predictor(path)
        assert isinstance(loaded, predictors.CompositeLatentPredictor)
        assert loaded.autoencoder.latent_dim == 4
        assert loaded.evaluator.kind == "robust_feature"
