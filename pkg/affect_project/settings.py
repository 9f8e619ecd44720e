"""
Django settings for affect_project project.

Проєкт без веб-інтерфейсу: Django використовується як каркас для
management-команд, ORM-журналу експериментів і конфігурації.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""
import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get('AFFECT_SECRET_KEY', 'django-insecure-affect-local-experiments-only')

DEBUG = False

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'rest_framework',
    'affect',
]


# Database
# https://docs.djangoproject.com/en/5.2/ref/settings/#databases

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}


# Internationalization
# https://docs.djangoproject.com/en/5.2/topics/i18n/

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True

# Default primary key field type
# https://docs.djangoproject.com/en/5.2/ref/settings/#default-auto-field

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Logging
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'affect': {
            'handlers': ['console'],
            'level': os.environ.get('AFFECT_LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
    },
}


# MODEL
# Значення за замовчуванням для повнорозмірної моделі (300/300/150, top-4, dropout 0.6)
AFFECT_MODEL_DEFAULTS = {
    'mode': 'M2',
    'embed_dim': 300,
    'lstm_hidden': 300,      # на кожен напрямок BiLSTM
    'context_dim': 150,
    'dt_k': 4,
    'dropout': 0.6,
    'head_hidden': 0,        # 0 = один афінний шар на задачу
    'init_stddev': 0.1,
    'train_embeddings': False,
}

# TRAINING
AFFECT_TRAIN_DEFAULTS = {
    'batch_size': 64,
    'lr': 0.001,
    'beta1': 0.9,
    'beta2': 0.999,
    'adam_epsilon': 1e-8,
    'epochs': 10,
    'seed': 13,
    'sentiment_weight': 1.0,
    'emotion_weight': 1.0,
    'threshold': 0.5,
    'patience': None,
    'workers': 1,
}

AFFECT_OUT_DIR = BASE_DIR / 'runs'

# поріг для gradcheck (максимальна відносна похибка)
AFFECT_GRADCHECK_TOLERANCE = 1e-3
