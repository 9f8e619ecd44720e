from rest_framework import serializers

from affect.services.network import MODES


class RunConfigSerializer(serializers.Serializer):
    """
    Валідація значень файлу конфігурації запуску.
    Ключі з крапкою (`corpus.train`, `loss.sentiment_weight`) приходять вже
    перейменованими RunConfigLoader-ом. Відсутні ключі беруться з налаштувань.
    """
    # шляхи
    corpus_train = serializers.CharField(required=False)
    corpus_test = serializers.CharField(required=False)
    embeddings = serializers.CharField(required=False)
    thesaurus = serializers.CharField(required=False)
    lexicon = serializers.CharField(required=False)
    out_dir = serializers.CharField(required=False)

    # модель
    mode = serializers.ChoiceField(choices=MODES, required=False)
    embed_dim = serializers.IntegerField(min_value=1, required=False)
    lstm_hidden = serializers.IntegerField(min_value=1, required=False)
    context_dim = serializers.IntegerField(min_value=1, required=False)
    dt_k = serializers.IntegerField(min_value=1, required=False)
    dropout = serializers.FloatField(min_value=0.0, required=False)
    head_hidden = serializers.IntegerField(min_value=0, required=False)
    init_stddev = serializers.FloatField(required=False)
    train_embeddings = serializers.BooleanField(required=False)

    # навчання
    batch_size = serializers.IntegerField(min_value=1, required=False)
    lr = serializers.FloatField(min_value=0.0, required=False)
    beta1 = serializers.FloatField(min_value=0.0, required=False)
    beta2 = serializers.FloatField(min_value=0.0, required=False)
    adam_epsilon = serializers.FloatField(required=False)
    epochs = serializers.IntegerField(min_value=1, required=False)
    seed = serializers.IntegerField(min_value=0, required=False)
    sentiment_weight = serializers.FloatField(min_value=0.0, required=False)
    emotion_weight = serializers.FloatField(min_value=0.0, required=False)
    threshold = serializers.FloatField(required=False)
    patience = serializers.IntegerField(min_value=1, required=False, allow_null=True)
    workers = serializers.IntegerField(min_value=1, required=False)

    def validate_dropout(self, value):
        if value >= 1.0:
            raise serializers.ValidationError("dropout повинен бути менше 1")
        return value

    def validate_init_stddev(self, value):
        if value <= 0:
            raise serializers.ValidationError("init_stddev повинен бути додатним")
        return value

    def validate_adam_epsilon(self, value):
        if value <= 0:
            raise serializers.ValidationError("adam_epsilon повинен бути додатним")
        return value

    def validate_threshold(self, value):
        if not 0.0 < value < 1.0:
            raise serializers.ValidationError("threshold повинен бути в (0, 1)")
        return value

    def validate(self, data):
        for key in ('beta1', 'beta2'):
            if key in data and data[key] >= 1.0:
                raise serializers.ValidationError({key: f"{key} повинен бути менше 1"})
        return data
