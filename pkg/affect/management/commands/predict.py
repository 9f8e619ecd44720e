from pathlib import Path

from affect.management.pipeline_command import PipelineCommand
from affect.services import checkpoint as checkpoints
from affect.services.network import forward, predict_labels
from affect.services.pipeline import PipelineService, stage


class Command(PipelineCommand):
    help = "Predict sentiment and emotions for a text with a trained checkpoint"

    def add_command_arguments(self, parser):
        parser.add_argument('text', nargs='?', default='', help="Текст твіта")
        parser.add_argument('--checkpoint', help="Чекпоінт (за замовчуванням <out_dir>/model.ckpt)")

    def run(self, *args, **options):
        text = (options.get('text') or '').strip()
        if not text:
            self.usage_error("Порожній текст. Використання: manage.py predict \"text\" --checkpoint PATH")

        run_config = self.load_config(options, required=()) if options.get('config') else None
        if options.get('checkpoint'):
            checkpoint_path = Path(options['checkpoint'])
        else:
            out_dir = run_config.out_dir if run_config else self.load_config(options, required=()).out_dir
            checkpoint_path = out_dir / checkpoints.CHECKPOINT_FILENAME
        checkpoint = PipelineService.load_checkpoint(checkpoint_path)
        if run_config is not None:
            with stage('checkpoint'):
                checkpoints.check_compatible(checkpoint, run_config.explicit_model_values())

        threshold = checkpoint.train_config.get('threshold', 0.5)
        if run_config is not None and 'threshold' in run_config.explicit_keys:
            threshold = run_config.train.threshold

        lexicon = PipelineService.checkpoint_lexicon(checkpoint, run_config)
        example = PipelineService.encode_text(text, checkpoint, lexicon)
        with stage('predict'):
            prediction = predict_labels(forward(example, checkpoint.params).logits, threshold)

        if prediction.sentiment is not None:
            self.stdout.write(f"sentiment: {prediction.sentiment}")
        if prediction.emotion_probabilities is not None:
            self.stdout.write(f"emotions: {', '.join(prediction.emotions) if prediction.emotions else '-'}")
        for label, probability in (prediction.sentiment_probabilities or {}).items():
            self.stdout.write(f"p(sentiment={label}) = {probability:.6f}")
        for label, probability in (prediction.emotion_probabilities or {}).items():
            self.stdout.write(f"p(emotion={label}) = {probability:.6f}")
