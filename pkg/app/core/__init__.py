"""Модели, регулятор, триггеры и сертификаты устойчивости"""
